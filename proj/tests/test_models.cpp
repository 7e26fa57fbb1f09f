#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>

#include "test_util.hpp"
#include "unpaired/errors.hpp"
#include "unpaired/models/model.hpp"
#include "unpaired/models/one_gan.hpp"
#include "unpaired/models/shared_encoder.hpp"
#include "unpaired/models/twin_vae.hpp"
#include "unpaired/nn/network.hpp"
#include "unpaired/util/log.hpp"

using namespace unpaired;
using namespace unpaired::testing;

namespace {

ModelConfig tiny_config(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.arch = tiny_arch();
  c.vae.latent_z = static_cast<int>(c.arch.latent_z);
  return c;
}

struct Batches {
  ImageBatch a, b;
};

Batches batches(int64_t n, uint64_t seed) {
  const auto imgs = synthetic_digits(2 * n, seed).images;
  return {{imgs.narrow(0, 0, n), Domain::A}, {1.0 - imgs.narrow(0, n, n), Domain::B}};
}

using Ledger = std::map<std::string, uint64_t>;

Ledger snapshot(TranslationModel& m) {
  Ledger l;
  for (auto& [name, net] : m.nets()) l[name] = parameter_hash(*net);
  return l;
}

std::set<std::string> changed(const Ledger& before, TranslationModel& m) {
  std::set<std::string> out;
  for (auto& [name, h] : snapshot(m))
    if (before.at(name) != h) out.insert(name);
  return out;
}

template <class T>
std::unique_ptr<T> make(Variant v, uint64_t seed = 1) {
  return std::make_unique<T>(tiny_config(v), seed);
}

void expect_consistent(const LossBundle& b) {
  EXPECT_NEAR(b.total(), b.objective, 1e-6 * std::max(1.0, std::abs(b.objective)));
}

std::vector<std::string> names(const LossBundle& b) {
  std::vector<std::string> n;
  for (const auto& t : b.terms) n.push_back(t.name);
  return n;
}

}  // namespace

TEST(Variants, NamesRoundTrip) {
  for (const auto& n : variant_names()) EXPECT_EQ(to_string(variant_from_string(n)), n);
  EXPECT_THROW(variant_from_string("cyclegan"), ConfigError);
  auto c = tiny_config(Variant::Sequential);
  c.consistency = true;
  EXPECT_THROW(validate(c), ConfigError);
  c.variant = Variant::Interleaving;
  EXPECT_NO_THROW(validate(c));
  c.vae.latent_z = 7;
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(LossBundleTest, Bookkeeping) {
  LossBundle b;
  b.add("x", 2.0, 0.5);
  b.add("y", 3.0, 2.0);
  EXPECT_DOUBLE_EQ(b.total(), 7.0);
  EXPECT_THROW(b.add("x", 1.0, 1.0), StateError);
  EXPECT_THROW(b.term("z"), StateError);
  EXPECT_TRUE(b.has("y"));
  LossBundle o;
  o.add("w", 1.0, 1.0);
  b.merge(o);
  EXPECT_EQ(names(b), (std::vector<std::string>{"x", "y", "w"}));
}

TEST(OneGan, CriticStepTouchesOnlyCritic) {
  auto m = make<OneGanModel>(Variant::OneGan);
  auto [x, y] = batches(4, 1);
  const auto before = snapshot(*m);
  const auto b = m->critic_step(x, y);
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"D"}));
  EXPECT_EQ(names(b), (std::vector<std::string>{"L_D", "L_gradD"}));
  EXPECT_EQ(b.term("L_gradD").weight, 2.0);
  EXPECT_EQ(*m->last_critic_loss, b.value("L_D"));
  expect_consistent(b);
}

TEST(OneGan, GeneratorGatedOnNegativeCriticLoss) {
  auto m = make<OneGanModel>(Variant::OneGan);
  auto [x, y] = batches(4, 2);
  auto before = snapshot(*m);
  EXPECT_FALSE(m->generator_step(x, y).has_value());
  m->last_critic_loss = 0.25;
  EXPECT_FALSE(m->generator_step(x, y).has_value());
  m->last_critic_loss = 0.0;
  EXPECT_FALSE(m->generator_step(x, y).has_value());
  EXPECT_TRUE(changed(before, *m).empty());

  m->last_critic_loss = -0.1;
  const auto g = m->generator_step(x, y);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"G", "F"}));
  EXPECT_EQ(names(*g), (std::vector<std::string>{"L_cyc", "L_G", "L_gradG", "L_sim"}));
  EXPECT_EQ(g->term("L_gradG").weight, 0.5);
  expect_consistent(*g);
}

TEST(OneGan, ClassifierStepTouchesOnlyClassifier) {
  auto m = make<OneGanModel>(Variant::OneGan);
  auto [x, y] = batches(4, 3);
  const auto before = snapshot(*m);
  const auto b = m->classifier_step(x, y);
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"C"}));
  EXPECT_EQ(names(b), (std::vector<std::string>{"L_C"}));
}

TEST(OneGan, OptionalLossGradientPenalty) {
  auto cfg = tiny_config(Variant::OneGan);
  cfg.gan.loss_gradient_penalty = true;
  OneGanModel m(cfg, 1);
  auto [x, y] = batches(3, 4);
  const auto b = m.critic_step(x, y);
  EXPECT_TRUE(b.has("L_gradLD"));
  expect_consistent(b);
}

TEST(OneGan, NonFiniteObjectiveLeavesParameters) {
  auto m = make<OneGanModel>(Variant::OneGan);
  auto [x, y] = batches(3, 5);
  x.data = x.data.clone();
  x.data[0][0][3][3] = std::numeric_limits<float>::quiet_NaN();
  const auto before = snapshot(*m);
  const auto b = m->critic_step(x, y);
  EXPECT_TRUE(b.aborted);
  EXPECT_TRUE(changed(before, *m).empty());
}

TEST(OneGan, DomainTagsChecked) {
  auto m = make<OneGanModel>(Variant::OneGan);
  auto [x, y] = batches(2, 6);
  EXPECT_THROW(m->critic_step(y, x), StateError);
  EXPECT_THROW(m->translate(y, Direction::A2B), StateError);
  const auto t = m->translate(x, Direction::A2B);
  EXPECT_EQ(t.domain, Domain::B);
  EXPECT_GE(t.data.min().item<float>(), 0.0f);
  EXPECT_LE(t.data.max().item<float>(), 1.0f);
  EXPECT_TRUE(torch::equal(m->translate(x.data, Direction::A2B), m->translate(x.data, Direction::A2B)));
}

TEST(TwinVae, SequentialStepTermsAndNets) {
  auto m = make<TwinVaeModel>(Variant::Sequential);
  auto [x, y] = batches(4, 7);
  const auto before = snapshot(*m);
  const auto b = m->step(x, y);
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"E_A", "D_A", "E_B", "D_B"}));
  for (const char* n : {"recon_A", "kl_A", "recon_B", "kl_B", "cyc_recon_A", "cyc_kl_in_A", "cyc_kl_out_A",
                        "cyc_recon_B", "cyc_kl_in_B", "cyc_kl_out_B"})
    EXPECT_TRUE(b.has(n)) << n;
  EXPECT_EQ(b.term("kl_A").weight, 4.0);
  expect_consistent(b);
}

TEST(TwinVae, StrictSequentialFreezesDecodersForCycle) {
  auto m = make<TwinVaeModel>(Variant::SequentialStrict);
  auto [x, y] = batches(4, 8);
  const auto before = snapshot(*m);
  m->sequential_step(x, y, {false, true});
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"E_A", "E_B"}));
}

TEST(TwinVae, StrictInterleavingFreezesEncodersForCycle) {
  auto m = make<TwinVaeModel>(Variant::InterleavingStrict);
  auto [x, y] = batches(4, 9);
  const auto before = snapshot(*m);
  const auto b = m->interleaving_step(x, y, {false, true});
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"D_A", "D_B"}));
  EXPECT_TRUE(b.has("cyc_recon_A"));
  const auto b2 = m->step(x, y);
  EXPECT_TRUE(b2.has("recon_A"));
  EXPECT_TRUE(b2.has("cyc_recon_B"));
}

TEST(TwinVae, CycleOffEqualsPlainVaeTraining) {
  auto a = make<TwinVaeModel>(Variant::Sequential, 3);
  auto b = make<TwinVaeModel>(Variant::Sequential, 3);
  auto [x, y] = batches(4, 10);
  const auto ba = a->sequential_step(x, y, {true, false});
  const auto bb = b->pretrain_step(x, y);
  for (const char* n : {"recon_A", "kl_A", "recon_B", "kl_B"}) EXPECT_NEAR(ba.value(n), bb.value(n), 1e-6) << n;
  auto na = a->nets(), nb = b->nets();
  for (size_t i = 0; i < na.size(); ++i) {
    auto pa = na[i].second->parameters(), pb = nb[i].second->parameters();
    for (size_t j = 0; j < pa.size(); ++j) EXPECT_TRUE(torch::allclose(pa[j], pb[j], 1e-5, 1e-6)) << na[i].first;
  }
}

TEST(TwinVae, InterleavingConsistencyTerm) {
  auto cfg = tiny_config(Variant::Interleaving);
  cfg.consistency = true;
  TwinVaeModel m(cfg, 1);
  auto [x, y] = batches(3, 11);
  const auto before = snapshot(m);
  const auto b = m.step(x, y);
  EXPECT_TRUE(b.has("consistency_A"));
  EXPECT_TRUE(b.has("consistency_B"));
  const auto ch = changed(before, m);
  EXPECT_TRUE(ch.count("AUX_A") && ch.count("AUX_B"));
  expect_consistent(b);
}

TEST(TwinVae, AlignedRequiresPretrainingAndFreezesVaes) {
  auto m = make<TwinVaeModel>(Variant::Aligned);
  auto [x, y] = batches(4, 12);
  EXPECT_THROW(m->aligned_step(x, y), StateError);
  m->pretrain_step(x, y);
  m->vaes_pretrained = true;
  const auto before = snapshot(*m);
  const auto b = m->aligned_step(x, y);
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"ALGN_A2B", "ALGN_B2A"}));
  for (const char* n : {"cyc_recon_A", "cyc_recon_B", "algnprior_A", "algnprior_B", "mirror_A", "mirror_B"})
    EXPECT_TRUE(b.has(n)) << n;
  expect_consistent(b);
}

TEST(TwinVae, VaeStepChecksDomain) {
  auto m = make<TwinVaeModel>(Variant::Sequential);
  auto [x, y] = batches(2, 13);
  EXPECT_THROW(m->vae_step(Domain::A, y), StateError);
  const auto before = snapshot(*m);
  m->vae_step(Domain::B, y);
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"E_B", "D_B"}));
}

TEST(TwinVae, DeterministicInference) {
  auto m = make<TwinVaeModel>(Variant::Interleaving);
  auto [x, y] = batches(3, 14);
  EXPECT_TRUE(torch::equal(m->translate(x.data, Direction::A2B), m->translate(x.data, Direction::A2B)));
  EXPECT_TRUE(torch::equal(m->cycle(y.data, Direction::B2A), m->cycle(y.data, Direction::B2A)));
  const auto r = m->reconstruct(x.data, Domain::A);
  ASSERT_TRUE(r.has_value());
  EXPECT_EQ(r->sizes(), x.data.sizes());
  const auto p = m->decode_prior(torch::randn({5, 6}), Domain::B);
  ASSERT_TRUE(p.has_value());
  EXPECT_EQ(p->size(0), 5);
}

TEST(SharedEncoder, StepTermsAndNets) {
  auto m = make<SharedEncoderModel>(Variant::SinkhornShared);
  auto [x, y] = batches(4, 15);
  const auto before = snapshot(*m);
  warnings_enabled() = false;
  const auto b = m->step(x, y);
  warnings_enabled() = true;
  EXPECT_EQ(changed(before, *m), (std::set<std::string>{"E", "D_A", "D_B"}));
  for (const char* n : {"recon_A", "sink_A", "recon_B", "sink_B", "cyc_recon_A", "cyc_sink_in_A", "cyc_sink_out_A",
                        "cyc_recon_B", "cyc_sink_in_B", "cyc_sink_out_B"})
    EXPECT_TRUE(b.has(n)) << n;
  EXPECT_TRUE(b.sinkhorn_converged.has_value());
  EXPECT_EQ(b.value("cyc_sink_in_A"), b.value("sink_A"));
  EXPECT_THROW(m->shared_step(x, y, {torch::randn({2, 6})}), SizeError);
}

class ModelCheckpoint : public ::testing::TestWithParam<std::string> {};

TEST_P(ModelCheckpoint, RoundTrip) {
  const auto cfg = tiny_config(variant_from_string(GetParam()));
  auto m = make_model(cfg, 21);
  m->step_count = 17;
  auto [x, y] = batches(3, 16);
  const auto dir = temp_dir("ckpt");
  save_model(*m, dir);
  auto back = load_model(dir);
  EXPECT_EQ(back->variant(), m->variant());
  EXPECT_EQ(back->step_count, 17);
  EXPECT_TRUE(torch::equal(back->translate(x.data, Direction::A2B), m->translate(x.data, Direction::A2B)));
  EXPECT_TRUE(torch::equal(back->cycle(y.data, Direction::B2A), m->cycle(y.data, Direction::B2A)));
}

INSTANTIATE_TEST_SUITE_P(AllVariants, ModelCheckpoint, ::testing::ValuesIn(variant_names()),
                         [](const auto& info) {
                           std::string s = info.param;
                           for (auto& c : s)
                             if (c == '-') c = '_';
                           return s;
                         });

TEST(ModelCheckpointErrors, MissingAndCorrupt) {
  EXPECT_THROW(load_model(temp_dir("absent") / "nope"), IoError);
  auto m = make_model(tiny_config(Variant::OneGan), 1);
  const auto dir = temp_dir("corrupt");
  save_model(*m, dir);
  {
    std::ofstream f(dir / "manifest.json");
    f << "{\"format_version\": 1, \"variant\": \"onegan\"";
  }
  EXPECT_THROW(load_model(dir), FormatError);
  save_model(*m, dir);
  {
    std::ifstream in(dir / "manifest.json");
    auto j = nlohmann::json::parse(in);
    j["variant"] = "sequential";
    std::ofstream(dir / "manifest.json") << j.dump();
  }
  EXPECT_THROW(load_model(dir), FormatError);
}
