#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "unpaired/losses/configs.hpp"
#include "unpaired/models/loss_bundle.hpp"
#include "unpaired/nn/arch_config.hpp"
#include "unpaired/nn/network.hpp"
#include "unpaired/tensor_types.hpp"
#include "unpaired/train/optimizer.hpp"

namespace unpaired {

enum class Variant { OneGan, Sequential, SequentialStrict, Interleaving, InterleavingStrict, Aligned, SinkhornShared };

std::string_view to_string(Variant v);
/// Throws ConfigError listing the valid names.
Variant variant_from_string(std::string_view s);
const std::vector<std::string>& variant_names();
bool is_twin_vae(Variant v);

struct ModelConfig {
  Variant variant = Variant::OneGan;
  ArchConfig arch;
  GanConfig gan;
  VaeConfig vae;
  SinkhornConfig sinkhorn;
  OptimizerSpec optimizer;
  bool consistency = false;  // interleaving only: separate-decoder consistency term
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void validate(const ModelConfig& c);

/// Common surface of the translation models. translate/cycle/reconstruct run without
/// gradients and without sampling, so repeated calls are bit-identical.
class TranslationModel {
 public:
  TranslationModel(ModelConfig cfg, uint64_t seed);
  virtual ~TranslationModel() = default;

  Variant variant() const { return cfg_.variant; }
  const ModelConfig& config() const { return cfg_; }

  /// Every network, by checkpoint name.
  virtual std::vector<std::pair<std::string, NetBase*>> nets() = 0;

  virtual torch::Tensor translate(const torch::Tensor& x, Direction d) = 0;
  virtual torch::Tensor cycle(const torch::Tensor& x, Direction d) = 0;
  /// Own-domain autoencoding; empty for models without one.
  virtual std::optional<torch::Tensor> reconstruct(const torch::Tensor&, Domain) { return std::nullopt; }
  /// Decodes latent codes with domain d's decoder; empty for models without a prior.
  virtual std::optional<torch::Tensor> decode_prior(const torch::Tensor&, Domain) { return std::nullopt; }
  /// Directions whose cycle is trained.
  virtual std::vector<Direction> trained_directions() const { return {Direction::A2B, Direction::B2A}; }

  /// Checks the batch's domain tag against the direction's source.
  ImageBatch translate(const ImageBatch& batch, Direction d);
  ImageBatch cycle(const ImageBatch& batch, Direction d);

  virtual nlohmann::json state() const;
  virtual void load_state(const nlohmann::json& j);

  /// Number of training iterations taken.
  int64_t step_count = 0;
  torch::Generator& rng() { return rng_; }

 protected:
  /// Backpropagates `obj` and steps the given optimizers; on a non-finite objective marks
  /// the bundle aborted and leaves every parameter untouched. Gradients are cleared either way.
  bool apply(const Objective& obj, LossBundle& bundle, const std::vector<NesterovAdadelta*>& opts);
  void clear_all_grads();
  NesterovAdadelta make_optimizer(NetBase& net) const;

  ModelConfig cfg_;
  torch::Generator init_gen_;
  torch::Generator rng_;
};

/// Builds the model for cfg.variant with parameters initialized from `seed`.
std::unique_ptr<TranslationModel> make_model(const ModelConfig& cfg, uint64_t seed);

inline constexpr int kModelFormatVersion = 1;

/// Directory with manifest.json (variant, configs, state) and one network directory each.
void save_model(TranslationModel& model, const std::filesystem::path& dir);
/// Throws IoError for missing files and FormatError for a manifest the networks disagree with.
std::unique_ptr<TranslationModel> load_model(const std::filesystem::path& dir);

void require_domain(const ImageBatch& b, Domain d, const char* what);

}  // namespace unpaired
