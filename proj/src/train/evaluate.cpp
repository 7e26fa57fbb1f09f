#include "unpaired/train/evaluate.hpp"

#include <png.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "unpaired/errors.hpp"
#include "unpaired/losses/losses.hpp"
#include "unpaired/nn/checkpoint.hpp"
#include "unpaired/train/optimizer.hpp"
#include "unpaired/util/rng.hpp"

namespace unpaired {

namespace fs = std::filesystem;

namespace {

constexpr uint64_t kProbeInitStream = 0x9b0b;
constexpr uint64_t kProbeDataStream = 0x9b0d;
constexpr int64_t kEvalChunk = 512;

template <class Fn>
torch::Tensor chunked(const torch::Tensor& x, int64_t chunk, Fn&& fn) {
  std::vector<torch::Tensor> parts;
  for (int64_t i = 0; i < x.size(0); i += chunk) parts.push_back(fn(x.slice(0, i, std::min(i + chunk, x.size(0)))));
  return torch::cat(parts);
}

torch::Tensor probe_prob(Classifier& probe, const torch::Tensor& x) {
  torch::NoGradGuard ng;
  return chunked(x, kEvalChunk, [&](const torch::Tensor& b) { return probe.forward(b); });
}

torch::Tensor head(const torch::Tensor& t, std::optional<int64_t> n) {
  return n ? t.slice(0, 0, std::min(*n, t.size(0))) : t;
}

double fraction(const torch::Tensor& mask) { return mask.to(torch::kFloat64).mean().item<double>(); }

}  // namespace

double probe_accuracy(Classifier& probe, const DomainPairDataset& ds, std::optional<int64_t> limit) {
  const auto pa = probe_prob(probe, head(ds.domain_a.images, limit));
  const auto pb = probe_prob(probe, head(ds.domain_b.images, limit));
  const auto correct = (pa >= kProbeThreshold).sum().item<int64_t>() + (pb < kProbeThreshold).sum().item<int64_t>();
  return static_cast<double>(correct) / static_cast<double>(pa.size(0) + pb.size(0));
}

ProbeResult train_domain_probe(const PreparedData& data, uint64_t seed, const ProbeOptions& opts) {
  auto gen = make_generator(derive_seed(seed, kProbeInitStream));
  ProbeResult res;
  res.probe = build_classifier(opts.arch, gen);
  NesterovAdadelta opt(res.probe->parameters(), opts.optimizer);
  const auto train = opts.train_limit ? data.train.head(*opts.train_limit) : data.train;
  UnpairedSampler sampler(train, opts.batch_size, derive_seed(seed, kProbeDataStream));
  std::ostringstream history;
  for (int epoch = 1; epoch <= opts.max_epochs; ++epoch) {
    sampler.start_epoch(epoch);
    for (int64_t i = 0; i < sampler.batches_per_epoch(); ++i) {
      const auto [x, y] = sampler.batch(i);
      opt.zero_grad();
      classifier_loss(res.probe->forward(x.data), res.probe->forward(y.data)).backward();
      opt.step();
    }
    opt.zero_grad();
    res.epochs = epoch;
    res.held_out_accuracy = probe_accuracy(*res.probe, data.test);
    history << (epoch > 1 ? ", " : "") << res.held_out_accuracy;
    if (res.held_out_accuracy >= opts.target_accuracy) return res;
  }
  throw StateError("domain probe reached only " + std::to_string(res.held_out_accuracy) + " held-out accuracy in " +
                   std::to_string(opts.max_epochs) + " epochs (target " + std::to_string(opts.target_accuracy) +
                   "; per epoch: " + history.str() + ")");
}

void save_probe(Classifier& probe, const fs::path& dir) { save_network(probe, dir); }

std::shared_ptr<Classifier> load_probe(const fs::path& dir) {
  const auto m = read_network_manifest(dir);
  ArchConfig arch;
  try {
    if (m.at("kind").get<std::string>() != "classifier") throw FormatError(dir.string() + " is not a classifier");
    arch = m.at("arch").get<ArchConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed probe manifest in " + dir.string() + ": " + e.what());
  }
  auto gen = make_generator(0);
  auto probe = build_classifier(arch, gen);
  load_network(*probe, dir);
  return probe;
}

nlohmann::ordered_json EvalReport::to_json() const {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nullptr; };
  nlohmann::ordered_json j;
  j["variant"] = variant;
  j["samples"] = samples;
  j["cycle_ihl"] = cycle_ihl;
  j["cycle_ihl_a2b"] = cycle_ihl_a2b;
  j["cycle_ihl_b2a"] = cycle_ihl_b2a;
  j["self_recon_ihl"] = opt(self_recon_ihl);
  j["probe_accuracy"] = probe_accuracy;
  j["probe_accuracy_a2b"] = probe_accuracy_a2b;
  j["probe_accuracy_b2a"] = probe_accuracy_b2a;
  j["probe_real_accuracy"] = probe_real_accuracy;
  j["prior_hole_rate"] = opt(prior_hole_rate);
  j["correspondence_ihl"] = opt(correspondence_ihl);
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  auto opt = [&](const char* k) -> std::optional<double> {
    if (!j.contains(k) || j[k].is_null()) return std::nullopt;
    return j[k].get<double>();
  };
  EvalReport r;
  try {
    r.variant = j.at("variant").get<std::string>();
    r.samples = j.at("samples").get<int64_t>();
    r.cycle_ihl = j.at("cycle_ihl").get<double>();
    r.cycle_ihl_a2b = j.at("cycle_ihl_a2b").get<double>();
    r.cycle_ihl_b2a = j.at("cycle_ihl_b2a").get<double>();
    r.self_recon_ihl = opt("self_recon_ihl");
    r.probe_accuracy = j.at("probe_accuracy").get<double>();
    r.probe_accuracy_a2b = j.at("probe_accuracy_a2b").get<double>();
    r.probe_accuracy_b2a = j.at("probe_accuracy_b2a").get<double>();
    r.probe_real_accuracy = j.at("probe_real_accuracy").get<double>();
    r.prior_hole_rate = opt("prior_hole_rate");
    r.correspondence_ihl = opt("correspondence_ihl");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

EvalReport evaluate(TranslationModel& model, const DomainPairDataset& test, Classifier& probe,
                    const EvalOptions& opts) {
  torch::NoGradGuard ng;
  const auto xa = head(test.domain_a.images, opts.max_samples);
  const auto xb = head(test.domain_b.images, opts.max_samples);
  if (xa.size(0) == 0 || xb.size(0) == 0) throw SizeError("evaluate: empty held-out split");
  const auto bs = opts.batch_size;
  auto run = [&](const torch::Tensor& x, auto&& fn) { return chunked(x, bs, fn); };

  EvalReport r;
  r.variant = std::string(to_string(model.variant()));
  r.samples = xa.size(0) + xb.size(0);

  const auto t_ab = run(xa, [&](const torch::Tensor& b) { return model.translate(b, Direction::A2B); });
  const auto t_ba = run(xb, [&](const torch::Tensor& b) { return model.translate(b, Direction::B2A); });
  const auto c_a = run(xa, [&](const torch::Tensor& b) { return model.cycle(b, Direction::A2B); });
  const auto c_b = run(xb, [&](const torch::Tensor& b) { return model.cycle(b, Direction::B2A); });
  r.cycle_ihl_a2b = ihl(c_a, xa).item<double>();
  r.cycle_ihl_b2a = ihl(c_b, xb).item<double>();
  r.probe_accuracy_a2b = fraction(probe_prob(probe, t_ab) < kProbeThreshold);
  r.probe_accuracy_b2a = fraction(probe_prob(probe, t_ba) >= kProbeThreshold);
  const auto dirs = model.trained_directions();
  double cyc = 0, acc = 0;
  for (auto d : dirs) {
    cyc += d == Direction::A2B ? r.cycle_ihl_a2b : r.cycle_ihl_b2a;
    acc += d == Direction::A2B ? r.probe_accuracy_a2b : r.probe_accuracy_b2a;
  }
  r.cycle_ihl = cyc / static_cast<double>(dirs.size());
  r.probe_accuracy = acc / static_cast<double>(dirs.size());
  r.probe_real_accuracy = probe_accuracy(probe, test, opts.max_samples);

  if (model.reconstruct(xa.slice(0, 0, 1), Domain::A)) {
    const auto ra = run(xa, [&](const torch::Tensor& b) { return *model.reconstruct(b, Domain::A); });
    const auto rb = run(xb, [&](const torch::Tensor& b) { return *model.reconstruct(b, Domain::B); });
    r.self_recon_ihl = 0.5 * (ihl(ra, xa).item<double>() + ihl(rb, xb).item<double>());
  }
  const auto z_dim = model.config().arch.latent_z;
  if (opts.prior_samples > 0 && model.decode_prior(torch::zeros({1, z_dim}), Domain::A)) {
    auto gen = make_generator(opts.seed);
    const auto z = torch::randn({2, opts.prior_samples, z_dim}, gen);
    const auto da = run(z[0], [&](const torch::Tensor& b) { return *model.decode_prior(b, Domain::A); });
    const auto db = run(z[1], [&](const torch::Tensor& b) { return *model.decode_prior(b, Domain::B); });
    const auto rejected = (probe_prob(probe, da) < kProbeThreshold).sum().item<int64_t>() +
                          (probe_prob(probe, db) >= kProbeThreshold).sum().item<int64_t>();
    r.prior_hole_rate = static_cast<double>(rejected) / static_cast<double>(2 * opts.prior_samples);
  }
  if (test.spec_a.ops.empty()) r.correspondence_ihl = ihl(t_ab, apply_transform_batch(xa, test.spec_b)).item<double>();
  return r;
}

torch::Tensor grid_bytes(const std::vector<torch::Tensor>& rows) {
  if (rows.empty()) throw SizeError("render_grid: no rows");
  auto norm = [](const torch::Tensor& t) {
    if (t.dim() == 4 && t.size(1) == 1) return t.squeeze(1);
    if (t.dim() == 3) return t;
    throw SizeError("render_grid: rows must be n x 1 x H x W");
  };
  const auto first = norm(rows[0]);
  const int64_t n = first.size(0), h = first.size(1), w = first.size(2);
  std::vector<torch::Tensor> strips;
  for (const auto& row : rows) {
    const auto t = norm(row);
    if (t.sizes() != first.sizes()) throw SizeError("render_grid: rows differ in shape");
    // n x h x w -> h x (n w)
    strips.push_back(t.permute({1, 0, 2}).reshape({h, n * w}));
  }
  const auto img = torch::cat(strips, 0).to(torch::kFloat64).nan_to_num(0.0).clamp(0.0, 1.0);
  return (img * 255.0).round().to(torch::kUInt8).contiguous();
}

void render_grid(const std::vector<torch::Tensor>& rows, const fs::path& path) {
  const auto bytes = grid_bytes(rows);
  const auto height = static_cast<png_uint_32>(bytes.size(0));
  const auto width = static_cast<png_uint_32>(bytes.size(1));
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const auto* data = bytes.data_ptr<uint8_t>();
  for (png_uint_32 r = 0; r < height; ++r) png_write_row(png, const_cast<png_bytep>(data + r * width));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw IoError("failed closing " + path.string());
}

}  // namespace unpaired
