#pragma once

#include <filesystem>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "unpaired/data/domain_pair.hpp"
#include "unpaired/models/model.hpp"
#include "unpaired/nn/architectures.hpp"

namespace unpaired {

struct ProbeOptions {
  ArchConfig arch;
  int64_t batch_size = 64;
  int max_epochs = 20;
  double target_accuracy = 0.98;
  std::optional<int64_t> train_limit;
  OptimizerSpec optimizer;
};

struct ProbeResult {
  std::shared_ptr<Classifier> probe;
  double held_out_accuracy = 0.0;
  int epochs = 0;
};

/// Probe output is P(domain A); a sample counts as A when it is >= threshold.
inline constexpr double kProbeThreshold = 0.5;

/// Fraction of held-out images (both domains) the probe assigns to the right domain.
double probe_accuracy(Classifier& probe, const DomainPairDataset& ds, std::optional<int64_t> limit = {});

/// Trains an independent classifier on real training images only. Stops once the held-out
/// accuracy reaches the target; throws StateError with the accuracy history if it never does.
ProbeResult train_domain_probe(const PreparedData& data, uint64_t seed, const ProbeOptions& opts = {});

void save_probe(Classifier& probe, const std::filesystem::path& dir);
std::shared_ptr<Classifier> load_probe(const std::filesystem::path& dir);

struct EvalOptions {
  std::optional<int64_t> max_samples;  // per domain, from the head of the held-out split
  int64_t prior_samples = 1000;        // per decoder
  int64_t batch_size = 256;
  uint64_t seed = 0;                   // prior sampling
};

struct EvalReport {
  std::string variant;
  int64_t samples = 0;
  double cycle_ihl = 0.0;  // mean over the model's trained cycle directions
  double cycle_ihl_a2b = 0.0;
  double cycle_ihl_b2a = 0.0;
  std::optional<double> self_recon_ihl;
  double probe_accuracy = 0.0;  // translations judged in the target domain, trained directions
  double probe_accuracy_a2b = 0.0;
  double probe_accuracy_b2a = 0.0;
  double probe_real_accuracy = 0.0;
  std::optional<double> prior_hole_rate;
  /// Per-pixel IHL between A->B translations and the analytically transformed input;
  /// only when domain A is untransformed.
  std::optional<double> correspondence_ihl;

  nlohmann::ordered_json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

/// All metrics on the held-out split, with deterministic translation.
EvalReport evaluate(TranslationModel& model, const DomainPairDataset& test, Classifier& probe,
                    const EvalOptions& opts = {});

/// Rows are stages, columns samples; 8-bit grayscale, byte = round(255 * clamp(p, 0, 1)).
void render_grid(const std::vector<torch::Tensor>& rows, const std::filesystem::path& path);

/// The grid as a (rows*H) x (cols*W) uint8 tensor.
torch::Tensor grid_bytes(const std::vector<torch::Tensor>& rows);

}  // namespace unpaired
