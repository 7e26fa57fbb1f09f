#pragma once

#include <json.hpp>
#include <string>

namespace unpaired {

struct GanConfig {
  double penalty_exponent = 6.0;         // p in ||grad||^p
  double critic_penalty_weight = 2.0;
  double generator_penalty_weight = 0.5;
  // Optional ||grad_theta L_D||^2 term on the critic, off by default.
  bool loss_gradient_penalty = false;
  double loss_gradient_penalty_weight = 1.0;
  // "sum": L_cyc is weighted by the per-sample element count (IHL summed over each image,
  // averaged over the batch). "mean": weight 1.
  std::string cycle_reduction = "sum";
};

struct VaeConfig {
  double beta = 4.0;
  int latent_z = 100;
  // "sum": reconstruction and mirror terms are weighted by the per-sample element count,
  // putting them on the same per-sample scale as the summed KL. "mean": weight 1.
  std::string recon_reduction = "sum";
};

struct SinkhornConfig {
  double epsilon = 0.1;
  int max_iterations = 200;
  double tolerance = 1e-6;
};

void to_json(nlohmann::json& j, const GanConfig& c);
void from_json(const nlohmann::json& j, GanConfig& c);
void to_json(nlohmann::json& j, const VaeConfig& c);
void from_json(const nlohmann::json& j, VaeConfig& c);
void to_json(nlohmann::json& j, const SinkhornConfig& c);
void from_json(const nlohmann::json& j, SinkhornConfig& c);

/// Throw ConfigError on out-of-range values.
void validate(const GanConfig& c);
void validate(const VaeConfig& c);
void validate(const SinkhornConfig& c);

}  // namespace unpaired
