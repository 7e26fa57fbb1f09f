#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "test_util.hpp"
#include "unpaired/data/domain_pair.hpp"
#include "unpaired/errors.hpp"
#include "unpaired/models/model.hpp"
#include "unpaired/nn/architectures.hpp"
#include "unpaired/train/config.hpp"
#include "unpaired/train/evaluate.hpp"
#include "unpaired/train/harness.hpp"
#include "unpaired/train/optimizer.hpp"
#include "unpaired/util/log.hpp"
#include "unpaired/util/rng.hpp"

using namespace unpaired;
using namespace unpaired::testing;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

PreparedData synthetic_prepared(int64_t n, uint64_t seed) {
  PreparedData d;
  d.seed = seed;
  const auto spec_b = TransformSpec::parse("invert");
  d.train = make_domain_pair(synthetic_digits(n, seed), {}, spec_b, seed);
  d.test = make_domain_pair(synthetic_digits(n / 2, seed + 1), {}, spec_b, seed + 1);
  return d;
}

fs::path synthetic_dataset_dir(int64_t n = 64) {
  const auto dir = temp_dir("data");
  save_prepared(synthetic_prepared(n, 3), dir);
  return dir;
}

TrainConfig tiny_run(Variant v, const fs::path& data, const fs::path& out) {
  TrainConfig c;
  c.model.variant = v;
  c.model.arch = tiny_arch();
  c.model.vae.latent_z = 6;
  c.batch_size = 8;
  c.epochs = 1;
  c.seed = 5;
  c.data_dir = data;
  c.out_dir = out;
  c.train_limit = 16;
  return c;
}

/// Identity translator: every output equals its input.
class IdentityModel : public TranslationModel {
 public:
  IdentityModel() : TranslationModel(ModelConfig{}, 0) {}
  std::vector<std::pair<std::string, NetBase*>> nets() override { return {}; }
  torch::Tensor translate(const torch::Tensor& x, Direction) override { return x.clone(); }
  torch::Tensor cycle(const torch::Tensor& x, Direction) override { return x.clone(); }
  using TranslationModel::cycle;
  using TranslationModel::translate;
};

}  // namespace

TEST(Optimizer, FirstStepByHand) {
  for (const std::string type : {"nesterov_adadelta", "adadelta"}) {
    auto p = torch::tensor({1.0, -2.0}, torch::kFloat64).requires_grad_(true);
    OptimizerSpec s;
    s.type = type;
    s.lr = 0.5;
    NesterovAdadelta opt({p}, s);
    p.mutable_grad() = torch::tensor({0.3, -4.0}, torch::kFloat64);
    opt.step();
    for (int i = 0; i < 2; ++i) {
      const double g = i == 0 ? 0.3 : -4.0;
      const double sq = (1 - s.rho) * g * g;
      const double d = std::sqrt(s.eps) / std::sqrt(sq + s.eps) * g;
      const double scale = type == "adadelta" ? 1.0 : 1.0 + s.momentum;
      const double start = i == 0 ? 1.0 : -2.0;
      EXPECT_NEAR(p[i].item<double>(), start - s.lr * scale * d, 1e-12) << type;
    }
  }
}

TEST(Optimizer, SkipsParametersWithoutGradient) {
  auto a = torch::ones({3}).requires_grad_(true);
  auto b = torch::ones({3}).requires_grad_(true);
  NesterovAdadelta opt({a, b}, OptimizerSpec{});
  a.mutable_grad() = torch::ones({3});
  opt.step();
  EXPECT_TRUE(torch::equal(b, torch::ones({3})));
  EXPECT_FALSE(torch::equal(a, torch::ones({3})));
  opt.zero_grad();
  EXPECT_FALSE(a.grad().defined());
}

TEST(Optimizer, Validation) {
  OptimizerSpec s;
  s.lr = 0;
  EXPECT_THROW(validate(s), ConfigError);
  s = {};
  s.type = "sgd";
  EXPECT_THROW(validate(s), ConfigError);
  s = {};
  s.rho = 1.0;
  EXPECT_THROW(validate(s), ConfigError);
}

TEST(TrainConfigTest, JsonRoundTripAndErrors) {
  TrainConfig c;
  c.model.variant = Variant::Interleaving;
  c.model.consistency = true;
  c.batch_size = 32;
  c.train_limit = 100;
  const nlohmann::json j = c;
  const auto back = j.get<TrainConfig>();
  EXPECT_EQ(nlohmann::json(back), j);

  auto bad = j;
  bad["learning_rate"] = 0.1;
  EXPECT_THROW(bad.get<TrainConfig>(), ConfigError);

  const auto dir = temp_dir("cfg");
  EXPECT_THROW(load_train_config(dir / "missing.json"), IoError);
  std::ofstream(dir / "broken.json") << "{ \"epochs\": ";
  EXPECT_THROW(load_train_config(dir / "broken.json"), ConfigError);
  std::ofstream(dir / "ok.json") << R"({"variant": "sequential", "epochs": 3, "vae": {"beta": 2.0}})";
  const auto ok = load_train_config(dir / "ok.json");
  EXPECT_EQ(ok.model.variant, Variant::Sequential);
  EXPECT_EQ(ok.epochs, 3);
  EXPECT_EQ(ok.model.vae.beta, 2.0);
  EXPECT_EQ(ok.model.gan.penalty_exponent, 6.0);

  const auto o = apply_overrides(ok, {{"epochs", 7}, {"optimizer", {{"lr", 0.25}}}});
  EXPECT_EQ(o.epochs, 7);
  EXPECT_EQ(o.model.optimizer.lr, 0.25);
  EXPECT_EQ(o.model.vae.beta, 2.0);
  EXPECT_THROW(apply_overrides(ok, {{"batch_size", 0}}), ConfigError);
}

TEST(Metrics, RecordRoundTripKeepsKeyOrder) {
  MetricRecord r;
  r.step = 4;
  r.epoch = 2;
  r.losses = {{"L_D", -0.5}, {"L_gradD", 0.25}};
  r.generator_step = true;
  r.sinkhorn_converged = false;
  const auto j = r.to_json();
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  EXPECT_EQ(keys, (std::vector<std::string>{"step", "epoch", "wall_ms", "losses", "generator_step",
                                            "sinkhorn_converged"}));
  const auto back = MetricRecord::from_json(nlohmann::ordered_json::parse(j.dump()));
  EXPECT_EQ(back.losses, r.losses);
  EXPECT_EQ(back.sinkhorn_converged, r.sinkhorn_converged);
  EXPECT_EQ(back.step, 4);
}

TEST(Harness, ZeroEpochsWritesInitialAndFinal) {
  const auto data = synthetic_dataset_dir();
  auto cfg = tiny_run(Variant::OneGan, data, temp_dir("run"));
  cfg.epochs = 0;
  const auto res = run_training(cfg);
  EXPECT_EQ(res.steps, 0);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "checkpoints" / "epoch_0000" / "manifest.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "checkpoints" / "final" / "manifest.json"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "config.json"));
  EXPECT_TRUE(read_metrics(res.metrics_path).empty());
}

TEST(Harness, MissingDataIsIoError) {
  auto cfg = tiny_run(Variant::OneGan, temp_dir("nodata"), temp_dir("run"));
  EXPECT_THROW(run_training(cfg), IoError);
}

TEST(Harness, OneGanLogAndCheckpoints) {
  const auto data = synthetic_dataset_dir();
  const auto cfg = tiny_run(Variant::OneGan, data, temp_dir("run"));
  const auto res = run_training(cfg);
  EXPECT_EQ(res.steps, 2);
  EXPECT_FALSE(res.halted);
  const auto recs = read_metrics(res.metrics_path);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].step, 1);
  EXPECT_EQ(recs[0].losses.front().first, "L_D");
  EXPECT_EQ(recs[1].wall_ms, 0.0);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "checkpoints" / "epoch_0001" / "manifest.json"));
  auto m = load_model(res.final_checkpoint);
  EXPECT_EQ(m->step_count, 2);
}

TEST(Harness, IdenticalRunsAreBitIdentical) {
  const auto data = synthetic_dataset_dir();
  for (auto v : {Variant::OneGan, Variant::SequentialStrict}) {
    const auto c1 = tiny_run(v, data, temp_dir(std::string(to_string(v)) + "_1"));
    const auto c2 = tiny_run(v, data, temp_dir(std::string(to_string(v)) + "_2"));
    const auto r1 = run_training(c1);
    const auto r2 = run_training(c2);
    EXPECT_EQ(slurp(r1.metrics_path), slurp(r2.metrics_path));
    for (const auto& e : fs::recursive_directory_iterator(r1.final_checkpoint)) {
      if (!e.is_regular_file()) continue;
      const auto rel = fs::relative(e.path(), r1.final_checkpoint);
      EXPECT_EQ(slurp(e.path()), slurp(r2.final_checkpoint / rel)) << rel;
    }
  }
}

TEST(Harness, AlignedRunsPretrainThenAligns) {
  const auto data = synthetic_dataset_dir();
  auto cfg = tiny_run(Variant::Aligned, data, temp_dir("run"));
  cfg.pretrain_epochs = 1;
  const auto res = run_training(cfg);
  const auto recs = read_metrics(res.metrics_path);
  ASSERT_EQ(recs.size(), 4u);
  const auto has = [](const MetricRecord& r, const std::string& n) {
    for (auto& [k, v] : r.losses)
      if (k == n) return true;
    return false;
  };
  EXPECT_TRUE(has(recs[0], "recon_A"));
  EXPECT_FALSE(has(recs[0], "mirror_A"));
  EXPECT_TRUE(has(recs[3], "mirror_A"));
  EXPECT_EQ(recs[3].epoch, 2);
}

TEST(Harness, HaltsAfterRepeatedNonFiniteSteps) {
  auto prepared = synthetic_prepared(64, 3);
  prepared.train.domain_a.images = prepared.train.domain_a.images.clone();
  prepared.train.domain_a.images.index_put_({torch::indexing::Slice(), 0, 5, 5}, NAN);
  const auto data = temp_dir("nan");
  save_prepared(prepared, data);
  auto cfg = tiny_run(Variant::OneGan, data, temp_dir("run"));
  cfg.train_limit = {};
  warnings_enabled() = false;
  const auto res = run_training(cfg);
  warnings_enabled() = true;
  EXPECT_TRUE(res.halted);
  EXPECT_EQ(res.steps, kMaxNonFiniteSteps);
  EXPECT_EQ(res.final_checkpoint.filename(), "halted");
  EXPECT_TRUE(fs::exists(res.final_checkpoint / "manifest.json"));
}

TEST(Probe, FlatProbeIsAtChance) {
  const auto data = synthetic_prepared(64, 4);
  auto gen = make_generator(1);
  auto probe = build_classifier(tiny_arch(), gen);
  {
    torch::NoGradGuard ng;
    probe->out->weight.zero_();
    probe->out->bias.zero_();
  }
  EXPECT_DOUBLE_EQ(probe_accuracy(*probe, data.test), 0.5);
}

TEST(Probe, LearnsInversionPair) {
  const auto data = synthetic_prepared(256, 5);
  ProbeOptions o;
  o.arch = tiny_arch();
  o.batch_size = 16;
  o.max_epochs = 5;
  const auto res = train_domain_probe(data, 1, o);
  EXPECT_GE(res.held_out_accuracy, 0.98);
  const auto dir = temp_dir("probe");
  save_probe(*res.probe, dir);
  auto back = load_probe(dir);
  EXPECT_DOUBLE_EQ(probe_accuracy(*back, data.test), res.held_out_accuracy);
}

TEST(Probe, UnreachableTargetIsStateError) {
  const auto data = synthetic_prepared(32, 6);
  ProbeOptions o;
  o.arch = tiny_arch();
  o.batch_size = 8;
  o.max_epochs = 1;
  o.target_accuracy = 1.01;
  EXPECT_THROW(train_domain_probe(data, 1, o), StateError);
}

TEST(Evaluate, IdentityModel) {
  const auto data = synthetic_prepared(128, 7);
  ProbeOptions o;
  o.arch = tiny_arch();
  o.batch_size = 16;
  o.max_epochs = 5;
  auto probe = train_domain_probe(data, 1, o);
  IdentityModel m;
  const auto rep = evaluate(m, data.test, *probe.probe);
  EXPECT_EQ(rep.cycle_ihl, 0.0);
  EXPECT_NEAR(rep.probe_real_accuracy, probe.held_out_accuracy, 0.01);
  // identity "translations" stay in the source domain
  EXPECT_LE(rep.probe_accuracy, 1.0 - probe.held_out_accuracy + 0.05);
  ASSERT_TRUE(rep.correspondence_ihl.has_value());
  EXPECT_FALSE(rep.prior_hole_rate.has_value());
  const auto back = EvalReport::from_json(nlohmann::json::parse(rep.to_json().dump()));
  EXPECT_EQ(back.to_json(), rep.to_json());
}

TEST(Evaluate, VaeReportHasPriorHoleRate) {
  const auto data = synthetic_prepared(64, 8);
  auto gen = make_generator(2);
  auto probe = build_classifier(tiny_arch(), gen);
  ModelConfig mc;
  mc.variant = Variant::Sequential;
  mc.arch = tiny_arch();
  mc.vae.latent_z = 6;
  auto m = make_model(mc, 1);
  EvalOptions eo;
  eo.prior_samples = 20;
  const auto rep = evaluate(*m, data.test, *probe, eo);
  ASSERT_TRUE(rep.prior_hole_rate.has_value());
  EXPECT_GE(*rep.prior_hole_rate, 0.0);
  EXPECT_LE(*rep.prior_hole_rate, 1.0);
  ASSERT_TRUE(rep.self_recon_ihl.has_value());
}

TEST(Grid, BytesAndPng) {
  const auto r1 = torch::zeros({2, 1, 3, 3});
  auto r2 = torch::ones({2, 1, 3, 3});
  r2[1].fill_(0.5);
  const auto g = grid_bytes({r1, r2});
  EXPECT_EQ(g.sizes(), (std::vector<int64_t>{6, 6}));
  EXPECT_EQ(g[0][0].item<uint8_t>(), 0);
  EXPECT_EQ(g[3][0].item<uint8_t>(), 255);
  EXPECT_EQ(g[3][3].item<uint8_t>(), 128);
  const auto dir = temp_dir("grid");
  render_grid({r1, r2}, dir / "a.png");
  render_grid({r1, r2}, dir / "b.png");
  const auto bytes = slurp(dir / "a.png");
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(bytes.substr(1, 3), "PNG");
  EXPECT_EQ(bytes, slurp(dir / "b.png"));
}
