#pragma once

#include <gtest/gtest.h>
#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "unpaired/data/domain_pair.hpp"
#include "unpaired/nn/arch_config.hpp"

namespace unpaired::testing {

/// Relative error ||a - b|| / max(||a||, ||b||, floor).
inline double rel_err(const torch::Tensor& a, const torch::Tensor& b, double floor = 1e-12) {
  const double d = (a - b).norm().item<double>();
  const double s = std::max({a.norm().item<double>(), b.norm().item<double>(), floor});
  return d / s;
}

/// Central finite-difference gradient of a scalar function with respect to `inputs[i]`.
inline torch::Tensor fd_grad(const std::function<torch::Tensor()>& f, torch::Tensor input, double h = 1e-6) {
  torch::NoGradGuard ng;
  auto g = torch::zeros_like(input);
  auto flat = input.view(-1);
  auto gflat = g.view(-1);
  for (int64_t i = 0; i < flat.numel(); ++i) {
    const double orig = flat[i].item<double>();
    flat[i].fill_(orig + h);
    const double up = f().item<double>();
    flat[i].fill_(orig - h);
    const double down = f().item<double>();
    flat[i].fill_(orig);
    gflat[i].fill_((up - down) / (2 * h));
  }
  return g;
}

/// Worst relative error between autograd and finite differences over every tensor in `wrt`.
inline double grad_check(const std::function<torch::Tensor()>& f, const std::vector<torch::Tensor>& wrt,
                         double h = 1e-6) {
  for (auto t : wrt) t.mutable_grad() = torch::Tensor();
  f().backward();
  double worst = 0.0;
  for (auto t : wrt) {
    const auto analytic = t.grad().defined() ? t.grad().clone() : torch::zeros_like(t);
    const auto numeric = fd_grad(f, t, h);
    worst = std::max(worst, rel_err(analytic, numeric, 1e-8));
    t.mutable_grad() = torch::Tensor();
  }
  return worst;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "unpaired_tests" /
             (std::string(info ? info->test_suite_name() : "x") + "_" + (info ? info->name() : "y") + "_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Blurry synthetic "digits": a bright blob on black, n x 1 x 28 x 28, on the pixel lattice.
inline ImageCollection synthetic_digits(int64_t n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(9.0, 18.0), rad(2.5, 5.0);
  auto img = torch::zeros({n, 1, 28, 28});
  const auto ys = torch::arange(28, torch::kFloat64).view({28, 1});
  const auto xs = torch::arange(28, torch::kFloat64).view({1, 28});
  for (int64_t i = 0; i < n; ++i) {
    const double cy = pos(rng), cx = pos(rng), r = rad(rng);
    const auto d2 = (ys - cy).pow(2) + (xs - cx).pow(2);
    img[i][0] = torch::exp(-d2 / (2 * r * r)).to(torch::kFloat32);
  }
  ImageCollection c;
  c.images = snap_pixels(img);
  c.labels = torch::zeros({n}, torch::kInt64);
  return c;
}

/// Small architecture for fast model tests.
inline ArchConfig tiny_arch() {
  ArchConfig a;
  a.widths = {4, 8, 8};
  a.critic_z = 3;
  a.latent_z = 6;
  a.alignment_width = 8;
  return a;
}

}  // namespace unpaired::testing
