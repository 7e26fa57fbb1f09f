#pragma once

#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "unpaired/data/domain_pair.hpp"
#include "unpaired/models/twin_vae.hpp"
#include "unpaired/train/config.hpp"

namespace unpaired {

struct MetricRecord {
  int64_t step = 0;
  int64_t epoch = 0;
  double wall_ms = 0.0;
  std::vector<std::pair<std::string, double>> losses;  // raw term values
  bool generator_step = false;
  std::optional<bool> sinkhorn_converged;

  nlohmann::ordered_json to_json() const;
  static MetricRecord from_json(const nlohmann::ordered_json& j);
};

using MetricSink = std::function<void(const MetricRecord&)>;

/// Reads a JSON-lines metric log.
std::vector<MetricRecord> read_metrics(const std::filesystem::path& path);

struct TrainResult {
  std::filesystem::path out_dir;
  std::filesystem::path metrics_path;
  std::filesystem::path final_checkpoint;
  int64_t steps = 0;
  bool halted = false;  // three non-finite steps in a row
};

inline constexpr int kMaxNonFiniteSteps = 3;

/// Layout of out_dir: config.json (effective config), metrics.jsonl,
/// checkpoints/epoch_NNNN/ after every epoch (epoch_0000 is the initial state),
/// checkpoints/final/ at exit, checkpoints/halted/ on a numeric halt.
TrainResult run_training(const TrainConfig& cfg);

/// Self-domain training of both VAEs, each only on batches tagged with its own domain.
/// Marks the model pretrained. Returns the number of steps taken.
int64_t pretrain_vaes(TwinVaeModel& model, const DomainPairDataset& train, int64_t batch_size, int epochs,
                      uint64_t seed, const MetricSink& sink, int64_t first_step = 1, int64_t first_epoch = 1);

/// Pins the run to one thread and seeds the global generator.
void enter_reproducible_mode(uint64_t seed);

}  // namespace unpaired
