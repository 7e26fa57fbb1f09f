#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "unpaired/errors.hpp"
#include "unpaired/losses/losses.hpp"
#include "unpaired/nn/architectures.hpp"
#include "unpaired/util/log.hpp"
#include "unpaired/util/rng.hpp"

using namespace unpaired;
using namespace unpaired::testing;

namespace {

torch::TensorOptions f64() { return torch::TensorOptions().dtype(torch::kFloat64); }

CriticFn linear_critic(const torch::Tensor& w) {
  return [w](const torch::Tensor& u) { return (u.flatten(1) * w.flatten().unsqueeze(0)).sum(1); };
}

}  // namespace

TEST(Ihl, Examples) {
  const auto a = torch::zeros({3, 4}, f64());
  EXPECT_EQ(ihl(a + 2, a).item<double>(), 4.0);
  EXPECT_EQ(ihl(a + 0.5, a).item<double>(), 0.5);
  EXPECT_EQ(ihl(a, a).item<double>(), 0.0);
  EXPECT_EQ(ihl(a + 1, a).item<double>(), 1.0);
  EXPECT_THROW(ihl(a, torch::zeros({4, 3}, f64())), SizeError);
}

TEST(Ihl, MatchesOracleAndInvariants) {
  torch::manual_seed(1);
  for (int i = 0; i < 100; ++i) {
    const auto a = torch::randn({5, 7}, f64()) * 1.5;
    const auto b = torch::randn({5, 7}, f64()) * 1.5;
    const double v = ihl(a, b).item<double>();
    EXPECT_NEAR(v, oracle::ihl(a, b), 1e-12);
    EXPECT_EQ(v, ihl(b, a).item<double>());
    EXPECT_GE(v, 0.0);
    EXPECT_GE(v + 1e-12, (a - b).abs().mean().item<double>());
    EXPECT_GE(v + 1e-12, (a - b).pow(2).mean().item<double>());
  }
}

TEST(Wgan, Examples) {
  const auto s = torch::randn({6}, f64());
  EXPECT_EQ(wgan_critic_loss(s, s).item<double>(), 0.0);
  EXPECT_EQ(wgan_critic_loss(torch::full({4}, 2.5), torch::full({4}, 2.5)).item<float>(), 0.0f);
  EXPECT_EQ(wgan_critic_loss(torch::zeros({2}, f64()), torch::ones({2}, f64())).item<double>(), -1.0);
  EXPECT_EQ(wgan_generator_loss(torch::tensor({1.0, 3.0}, f64())).item<double>(), -2.0);
  EXPECT_EQ(wgan_generator_loss(torch::zeros({3}, f64())).item<double>(), 0.0);
  const auto fake = torch::randn({8}, f64()), real = torch::randn({8}, f64());
  EXPECT_NEAR(wgan_generator_loss(fake).item<double>(),
              -(wgan_critic_loss(fake, real).item<double>() + real.mean().item<double>()), 1e-12);
}

TEST(GradientPenalty, LinearCritic) {
  torch::manual_seed(2);
  const auto real = torch::rand({4, 1, 5, 5}, f64()), fake = torch::rand({4, 1, 5, 5}, f64());
  const auto mix = torch::rand({4}, f64());
  auto w = torch::randn({25}, f64());
  w = w / w.norm();
  for (double p : {1.0, 2.0, 6.0}) EXPECT_NEAR(gradient_penalty(linear_critic(w), real, fake, p, mix).item<double>(), 1.0, 1e-12);
  EXPECT_NEAR(gradient_penalty(linear_critic(2 * w), real, fake, 6.0, mix).item<double>(), 64.0, 1e-9);
  for (double k : {0.5, 1.0, 2.0})
    EXPECT_NEAR(gradient_penalty(linear_critic(k * w), real, fake, 6.0, mix).item<double>() / std::pow(k, 6), 1.0,
                1e-9);
}

TEST(GradientPenalty, MatchesFiniteDifferenceNorms) {
  auto gen = make_generator(3);
  auto critic = build_critic(tiny_arch(), gen);
  critic->to(torch::kFloat64);
  const auto real = torch::rand({2, 1, 28, 28}, f64()), fake = torch::rand({2, 1, 28, 28}, f64());
  const auto mix = torch::tensor({0.3, 0.8}, f64());
  const CriticFn fn = [&](const torch::Tensor& u) { return critic->forward(u); };
  const double analytic = gradient_penalty(fn, real, fake, 6.0, mix).item<double>();
  // FD on a random subset of pixels would bias the norm; use the full input but a coarse h
  double expected = 0;
  for (int i = 0; i < 2; ++i) {
    const double m = mix[i].item<double>();
    auto u = (m * real[i] + (1 - m) * fake[i]).unsqueeze(0).clone();
    const auto g = fd_grad([&] { return critic->forward(u).sum(); }, u, 1e-5);
    expected += std::pow(g.pow(2).sum().item<double>(), 3.0);
  }
  expected /= 2;
  EXPECT_LT(std::abs(analytic - expected) / expected, 1e-3);
}

TEST(GradientPenalty, DrawsMixFromGenerator) {
  auto g1 = make_generator(5), g2 = make_generator(5);
  const auto real = torch::rand({3, 1, 4, 4}), fake = torch::rand({3, 1, 4, 4});
  auto w = torch::randn({16});
  const CriticFn fn = [&](const torch::Tensor& u) { return (u.flatten(1) * w).sum(1).pow(2); };
  GanConfig cfg;
  EXPECT_EQ(gradient_penalty(fn, real, fake, cfg, g1).item<float>(), gradient_penalty(fn, real, fake, cfg, g2).item<float>());
  EXPECT_THROW(gradient_penalty(fn, real, torch::rand({2, 1, 4, 4}), cfg, g1), SizeError);
}

TEST(LossGradientPenalty, SquaredParameterGradientNorm) {
  auto w = torch::tensor({1.0, -2.0}, f64()).requires_grad_(true);
  const auto x = torch::tensor({3.0, 4.0}, f64());
  const auto loss = (w * x).sum();  // grad = x
  EXPECT_NEAR(loss_gradient_penalty(loss, {w}).item<double>(), 25.0, 1e-12);
}

TEST(Kl, Examples) {
  const auto zeros = torch::zeros({3, 4}, f64());
  EXPECT_EQ(kl_std_normal({zeros, zeros}).item<double>(), 0.0);
  auto mu = torch::zeros({1, 5}, f64());
  mu[0][2] = 1.0;
  EXPECT_NEAR(kl_std_normal({mu, torch::zeros({1, 5}, f64())}).item<double>(), 0.5, 1e-15);
}

TEST(Kl, OracleAndPositivity) {
  torch::manual_seed(4);
  for (int i = 0; i < 100; ++i) {
    const auto mu = torch::randn({3, 6}, f64()), lv = torch::randn({3, 6}, f64());
    const double v = kl_std_normal({mu, lv}).item<double>();
    EXPECT_NEAR(v, oracle::kl(mu, lv), 1e-12);
    EXPECT_GT(v, 0.0);
  }
}

TEST(Kl, MonteCarloAgreement) {
  torch::manual_seed(5);
  const auto mu = torch::randn({1, 4}, f64()) * 0.7, lv = torch::randn({1, 4}, f64()) * 0.5;
  auto gen = make_generator(11);
  const int64_t n = 1000000;
  const auto eta = torch::randn({n, 4}, gen, f64());
  const auto sd = (0.5 * lv).exp();
  const auto z = mu + sd * eta;
  // log q(z) - log p(z), summed over dims
  const auto log_q = (-0.5 * eta.pow(2) - 0.5 * lv).sum(1);
  const auto log_p = (-0.5 * z.pow(2)).sum(1);
  const double mc = (log_q - log_p).mean().item<double>();
  const double exact = kl_std_normal({mu, lv}).item<double>();
  EXPECT_LT(std::abs(mc - exact) / exact, 0.02);
}

TEST(Reparameterize, Contracts) {
  const auto mu = torch::tensor({{1.5, -2.0, 3.0}}, f64());
  auto gen = make_generator(1);
  const auto z = reparameterize({mu, torch::full({1, 3}, -1e4, f64())}, gen).codes;
  EXPECT_TRUE(torch::equal(z, mu));
  auto g1 = make_generator(9), g2 = make_generator(9);
  const auto lv = torch::zeros({1, 3}, f64());
  EXPECT_TRUE(torch::equal(reparameterize({mu, lv}, g1).codes, reparameterize({mu, lv}, g2).codes));
  auto g3 = make_generator(10);
  const auto big = mu.expand({100000, 3}).contiguous();
  const auto m = reparameterize({big, torch::zeros_like(big)}, g3).codes.mean(0);
  EXPECT_LT(((m - mu[0]).abs() / mu[0].abs()).max().item<double>(), 0.01);
}

TEST(Cosine, Examples) {
  const auto v = torch::tensor({1.0, 2.0, -0.5}, f64());
  EXPECT_NEAR(cosine_dissimilarity(v, v), 0.0, 1e-15);
  EXPECT_NEAR(cosine_dissimilarity(v, -v), 2.0, 1e-15);
  EXPECT_NEAR(cosine_dissimilarity(torch::tensor({1.0, 0.0}), torch::tensor({0.0, 3.0})), 1.0, 1e-15);
  const auto before = warning_count().load();
  warnings_enabled() = false;
  EXPECT_EQ(cosine_dissimilarity(torch::zeros({3}), v), 1.0);
  warnings_enabled() = true;
  EXPECT_EQ(warning_count().load(), before + 1);
}

TEST(Cosine, CostMatrixMatchesPairwise) {
  torch::manual_seed(6);
  auto r = torch::randn({4, 5}, f64());
  const auto q = torch::randn({3, 5}, f64());
  r[2].zero_();
  const auto c = cosine_cost_matrix(r, q);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 3; ++j)
      EXPECT_NEAR(c[i][j].item<double>(), oracle::cosine(oracle::values(r[i]), oracle::values(q[j])), 1e-12);
}

TEST(Heatmap, ShapeRangeAndDegenerate) {
  auto gen = make_generator(7);
  auto c = build_classifier(tiny_arch(), gen);
  const auto x = torch::rand({3, 1, 28, 28});
  const auto h = heatmap(*c, x).map;
  EXPECT_EQ(h.sizes(), (std::vector<int64_t>{3, 1, 28, 28}));
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(h[i].min().item<float>(), 0.0f);
    EXPECT_EQ(h[i].max().item<float>(), 1.0f);
  }
  {
    torch::NoGradGuard ng;
    c->out->weight.zero_();
  }
  EXPECT_EQ(heatmap(*c, x).map.abs().max().item<float>(), 0.0f);
  EXPECT_EQ(minmax_per_sample(torch::full({2, 1, 4, 4}, 0.3)).abs().max().item<float>(), 0.0f);
}

TEST(Similarity, Examples) {
  const auto x = torch::rand({2, 1, 6, 6}), gx = torch::rand({2, 1, 6, 6});
  const HeatMap hot{torch::ones({2, 1, 6, 6})}, cold{torch::zeros({2, 1, 6, 6})};
  EXPECT_EQ(similarity_loss(x, x, cold).item<float>(), 0.0f);
  EXPECT_EQ(similarity_loss(x, gx, hot).item<float>(), 0.0f);
  EXPECT_NEAR(similarity_loss(x, gx, cold).item<float>(), (x - gx).abs().mean().item<float>(), 1e-7);
}

TEST(ClassifierLoss, Examples) {
  const double d = 1e-9;
  EXPECT_LT(classifier_loss(torch::full({3}, 1 - d, f64()), torch::full({3}, d, f64())).item<double>(), 1e-6);
  EXPECT_NEAR(classifier_loss(torch::full({3}, 0.5, f64()), torch::full({3}, 0.5, f64())).item<double>(),
              2 * std::log(2.0), 1e-12);
  auto pa = torch::full({2}, 0.4, f64()).requires_grad_(true);
  auto pb = torch::full({2}, 0.6, f64()).requires_grad_(true);
  classifier_loss(pa, pb).backward();
  EXPECT_LT(pa.grad().max().item<double>(), 0.0);  // descent raises p_a
  EXPECT_GT(pb.grad().min().item<double>(), 0.0);  // and lowers p_b
  EXPECT_TRUE(std::isfinite(classifier_loss(torch::zeros({2}), torch::ones({2})).item<float>()));
}

TEST(Mirror, Examples) {
  const auto z = torch::randn({4, 100}, f64());
  EXPECT_EQ(mirror_loss(z, z).item<double>(), 0.0);
  auto shifted = torch::zeros({1, 100}, f64());
  shifted[0][17] = 1.0;
  EXPECT_NEAR(mirror_loss(torch::zeros({1, 100}, f64()), shifted).item<double>(), 0.01, 1e-15);
  EXPECT_NEAR(mirror_loss(z, torch::zeros_like(z)).item<double>(), z.pow(2).mean().item<double>(), 1e-15);
  EXPECT_NEAR(mirror_loss(z, z * 0.5).item<double>(), oracle::mirror(z, z * 0.5), 1e-12);
  EXPECT_THROW(mirror_loss(z, torch::zeros({4, 99}, f64())), SizeError);
}

TEST(LossGradients, MatchFiniteDifferences) {
  torch::manual_seed(8);
  auto a = torch::rand({3, 4}, f64()).mul(3).requires_grad_(true);
  const auto b = torch::rand({3, 4}, f64());
  EXPECT_LT(grad_check([&] { return ihl(a, b); }, {a}), 1e-3);

  auto mu = torch::randn({2, 3}, f64()).requires_grad_(true);
  auto lv = torch::randn({2, 3}, f64()).requires_grad_(true);
  EXPECT_LT(grad_check([&] { return kl_std_normal({mu, lv}); }, {mu, lv}), 1e-3);

  auto x = torch::rand({2, 1, 4, 4}, f64()).requires_grad_(true);
  const auto gx = torch::rand({2, 1, 4, 4}, f64());
  const HeatMap h{torch::rand({2, 1, 4, 4}, f64())};
  EXPECT_LT(grad_check([&] { return similarity_loss(x, gx, h); }, {x}), 1e-3);

  auto pa = (torch::rand({4}, f64()) * 0.8 + 0.1).requires_grad_(true);
  auto pb = (torch::rand({4}, f64()) * 0.8 + 0.1).requires_grad_(true);
  EXPECT_LT(grad_check([&] { return classifier_loss(pa, pb); }, {pa, pb}), 1e-3);

  auto z = torch::randn({3, 5}, f64()).requires_grad_(true);
  auto r = torch::randn({3, 5}, f64()).requires_grad_(true);
  EXPECT_LT(grad_check([&] { return mirror_loss(z, r); }, {z, r}), 1e-3);
  EXPECT_LT(grad_check([&] { return cosine_cost_matrix(z, r).pow(2).sum(); }, {z, r}), 1e-3);

  auto fake = torch::rand({2, 1, 3, 3}, f64()).requires_grad_(true);
  const auto real = torch::rand({2, 1, 3, 3}, f64());
  auto w = torch::randn({9, 2}, f64()).requires_grad_(true);
  const auto mix = torch::tensor({0.25, 0.6}, f64());
  // smooth nonlinear critic so the penalty depends on u, w and (through u) on fake
  const CriticFn critic = [&](const torch::Tensor& u) { return torch::tanh(u.flatten(1).matmul(w)).sum(1); };
  EXPECT_LT(grad_check([&] { return gradient_penalty(critic, real, fake, 6.0, mix); }, {fake, w}), 1e-3);
}
