#include "unpaired/models/model.hpp"

#include <cmath>
#include <fstream>

#include "unpaired/errors.hpp"
#include "unpaired/models/one_gan.hpp"
#include "unpaired/models/shared_encoder.hpp"
#include "unpaired/models/twin_vae.hpp"
#include "unpaired/nn/checkpoint.hpp"
#include "unpaired/util/rng.hpp"

namespace unpaired {

namespace {

constexpr std::pair<Variant, std::string_view> kVariants[] = {
    {Variant::OneGan, "onegan"},
    {Variant::Sequential, "sequential"},
    {Variant::SequentialStrict, "sequential-strict"},
    {Variant::Interleaving, "interleaving"},
    {Variant::InterleavingStrict, "interleaving-strict"},
    {Variant::Aligned, "aligned"},
    {Variant::SinkhornShared, "sinkhorn-shared"},
};

constexpr uint64_t kInitStream = 0x1a17;
constexpr uint64_t kStepStream = 0x57e9;

}  // namespace

std::string_view to_string(Variant v) {
  for (const auto& [k, name] : kVariants)
    if (k == v) return name;
  return "?";
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& kv : kVariants) n.emplace_back(kv.second);
    return n;
  }();
  return names;
}

Variant variant_from_string(std::string_view s) {
  for (const auto& [k, name] : kVariants)
    if (name == s) return k;
  std::string valid;
  for (const auto& n : variant_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw ConfigError("unknown variant '" + std::string(s) + "' (valid: " + valid + ")");
}

bool is_twin_vae(Variant v) {
  return v == Variant::Sequential || v == Variant::SequentialStrict || v == Variant::Interleaving ||
         v == Variant::InterleavingStrict || v == Variant::Aligned;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = {{"variant", std::string(to_string(c.variant))},
       {"arch", c.arch},
       {"gan", c.gan},
       {"vae", c.vae},
       {"sinkhorn", c.sinkhorn},
       {"optimizer", c.optimizer},
       {"consistency", c.consistency}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  ModelConfig d;
  c.variant = variant_from_string(j.value("variant", std::string(to_string(d.variant))));
  c.arch = j.value("arch", d.arch);
  c.gan = j.value("gan", d.gan);
  c.vae = j.value("vae", d.vae);
  if (!j.contains("vae") || !j["vae"].contains("latent_z")) c.vae.latent_z = c.arch.latent_z;
  c.sinkhorn = j.value("sinkhorn", d.sinkhorn);
  c.optimizer = j.value("optimizer", d.optimizer);
  c.consistency = j.value("consistency", d.consistency);
}

void validate(const ModelConfig& c) {
  validate(c.arch);
  validate(c.gan);
  validate(c.vae);
  validate(c.sinkhorn);
  validate(c.optimizer);
  if (c.vae.latent_z != c.arch.latent_z)
    throw ConfigError("vae.latent_z (" + std::to_string(c.vae.latent_z) + ") differs from arch.latent_z (" +
                      std::to_string(c.arch.latent_z) + ")");
  if (c.consistency && c.variant != Variant::Interleaving && c.variant != Variant::InterleavingStrict)
    throw ConfigError("the consistency term applies to the interleaving variants only");
}

void require_domain(const ImageBatch& b, Domain d, const char* what) {
  if (b.domain != d)
    throw StateError(std::string(what) + ": expected a domain " + std::string(to_string(d)) + " batch, got " +
                     std::string(to_string(b.domain)));
}

TranslationModel::TranslationModel(ModelConfig cfg, uint64_t seed)
    : cfg_(std::move(cfg)),
      init_gen_(make_generator(derive_seed(seed, kInitStream))),
      rng_(make_generator(derive_seed(seed, kStepStream))) {}

ImageBatch TranslationModel::translate(const ImageBatch& batch, Direction d) {
  require_domain(batch, source_domain(d), "translate");
  return {translate(batch.data, d), other(batch.domain)};
}

ImageBatch TranslationModel::cycle(const ImageBatch& batch, Direction d) {
  require_domain(batch, source_domain(d), "cycle");
  return {cycle(batch.data, d), batch.domain};
}

nlohmann::json TranslationModel::state() const { return {{"step", step_count}}; }

void TranslationModel::load_state(const nlohmann::json& j) { step_count = j.value("step", int64_t{0}); }

void TranslationModel::clear_all_grads() {
  for (auto& [name, net] : nets()) clear_grads(*net);
}

NesterovAdadelta TranslationModel::make_optimizer(NetBase& net) const {
  return NesterovAdadelta(net.parameters(), cfg_.optimizer);
}

bool TranslationModel::apply(const Objective& obj, LossBundle& bundle,
                             const std::vector<NesterovAdadelta*>& opts) {
  clear_all_grads();
  if (obj.empty()) return true;
  const double v = obj.tensor().item<double>();
  bundle.objective += v;
  if (!std::isfinite(v)) {
    bundle.aborted = true;
    return false;
  }
  if (obj.tensor().requires_grad()) {
    obj.tensor().backward();
    for (auto* o : opts) o->step();
  }
  clear_all_grads();
  return true;
}

std::unique_ptr<TranslationModel> make_model(const ModelConfig& cfg, uint64_t seed) {
  validate(cfg);
  if (cfg.variant == Variant::OneGan) return std::make_unique<OneGanModel>(cfg, seed);
  if (cfg.variant == Variant::SinkhornShared) return std::make_unique<SharedEncoderModel>(cfg, seed);
  return std::make_unique<TwinVaeModel>(cfg, seed);
}

void save_model(TranslationModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json names = nlohmann::json::array();
  for (auto& [name, net] : model.nets()) {
    save_network(*net, dir / name);
    names.push_back(name);
  }
  nlohmann::json m = {{"format_version", kModelFormatVersion},
                      {"variant", std::string(to_string(model.variant()))},
                      {"config", model.config()},
                      {"state", model.state()},
                      {"nets", names}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

std::unique_ptr<TranslationModel> load_model(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError("missing model manifest " + path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed " + path.string() + ": " + e.what());
  }
  std::unique_ptr<TranslationModel> model;
  try {
    if (m.value("format_version", 0) != kModelFormatVersion)
      throw FormatError("unsupported model manifest version in " + path.string());
    auto cfg = m.at("config").get<ModelConfig>();
    if (std::string(to_string(cfg.variant)) != m.at("variant").get<std::string>())
      throw FormatError("model manifest variant disagrees with its config");
    model = make_model(cfg, 0);
    std::vector<std::string> expected;
    for (auto& [name, net] : model->nets()) expected.push_back(name);
    if (m.at("nets").get<std::vector<std::string>>() != expected)
      throw FormatError("model manifest lists different networks than a " + m.at("variant").get<std::string>() +
                        " model has");
    for (auto& [name, net] : model->nets()) load_network(*net, dir / name);
    model->load_state(m.at("state"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed model manifest " + path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError("model manifest " + path.string() + ": " + e.what());
  }
  return model;
}

}  // namespace unpaired
