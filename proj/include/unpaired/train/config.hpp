#pragma once

#include <filesystem>
#include <json.hpp>
#include <optional>

#include "unpaired/models/model.hpp"

namespace unpaired {

struct TrainConfig {
  ModelConfig model;
  int64_t batch_size = 64;
  int epochs = 20;
  /// Aligned variant: self-domain epochs before alignment; negative means `epochs`.
  int pretrain_epochs = -1;
  uint64_t seed = 0;
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;
  /// Single-threaded, wall_ms logged as 0, so logs and checkpoints repeat bit-exactly.
  bool reproducible = true;
  /// Use only the first n training images of each domain.
  std::optional<int64_t> train_limit;
};

/// Flat key tree: the model keys (variant, arch, gan, vae, sinkhorn, optimizer,
/// consistency) next to the run keys. Unknown keys are rejected.
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void validate(const TrainConfig& c);

/// Throws IoError when the file is missing and ConfigError when it does not parse.
TrainConfig load_train_config(const std::filesystem::path& path);
/// Merges `overrides` (same key tree) into `base`.
TrainConfig apply_overrides(const TrainConfig& base, const nlohmann::json& overrides);

}  // namespace unpaired
