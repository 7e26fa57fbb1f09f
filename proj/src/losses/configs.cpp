#include "unpaired/losses/configs.hpp"

#include <cmath>

#include "unpaired/errors.hpp"

namespace unpaired {

void to_json(nlohmann::json& j, const GanConfig& c) {
  j = {{"penalty_exponent", c.penalty_exponent},
       {"critic_penalty_weight", c.critic_penalty_weight},
       {"generator_penalty_weight", c.generator_penalty_weight},
       {"loss_gradient_penalty", c.loss_gradient_penalty},
       {"loss_gradient_penalty_weight", c.loss_gradient_penalty_weight},
       {"cycle_reduction", c.cycle_reduction}};
}

void from_json(const nlohmann::json& j, GanConfig& c) {
  GanConfig d;
  c.penalty_exponent = j.value("penalty_exponent", d.penalty_exponent);
  c.critic_penalty_weight = j.value("critic_penalty_weight", d.critic_penalty_weight);
  c.generator_penalty_weight = j.value("generator_penalty_weight", d.generator_penalty_weight);
  c.loss_gradient_penalty = j.value("loss_gradient_penalty", d.loss_gradient_penalty);
  c.loss_gradient_penalty_weight = j.value("loss_gradient_penalty_weight", d.loss_gradient_penalty_weight);
  c.cycle_reduction = j.value("cycle_reduction", d.cycle_reduction);
}

void to_json(nlohmann::json& j, const VaeConfig& c) {
  j = {{"beta", c.beta}, {"latent_z", c.latent_z}, {"recon_reduction", c.recon_reduction}};
}

void from_json(const nlohmann::json& j, VaeConfig& c) {
  VaeConfig d;
  c.beta = j.value("beta", d.beta);
  c.latent_z = j.value("latent_z", d.latent_z);
  c.recon_reduction = j.value("recon_reduction", d.recon_reduction);
}

void to_json(nlohmann::json& j, const SinkhornConfig& c) {
  j = {{"epsilon", c.epsilon}, {"max_iterations", c.max_iterations}, {"tolerance", c.tolerance}};
}

void from_json(const nlohmann::json& j, SinkhornConfig& c) {
  SinkhornConfig d;
  c.epsilon = j.value("epsilon", d.epsilon);
  c.max_iterations = j.value("max_iterations", d.max_iterations);
  c.tolerance = j.value("tolerance", d.tolerance);
}

void validate(const GanConfig& c) {
  if (!(c.penalty_exponent >= 1.0)) throw ConfigError("gan.penalty_exponent must be >= 1");
  if (!(c.critic_penalty_weight >= 0.0) || !(c.generator_penalty_weight >= 0.0) ||
      !(c.loss_gradient_penalty_weight >= 0.0))
    throw ConfigError("gan penalty weights must be >= 0");
  if (c.cycle_reduction != "sum" && c.cycle_reduction != "mean")
    throw ConfigError("gan.cycle_reduction must be sum or mean");
}

void validate(const VaeConfig& c) {
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) throw ConfigError("vae.beta must be > 0");
  if (c.latent_z < 1) throw ConfigError("vae.latent_z must be >= 1");
  if (c.recon_reduction != "sum" && c.recon_reduction != "mean")
    throw ConfigError("vae.recon_reduction must be sum or mean");
}

void validate(const SinkhornConfig& c) {
  if (!(c.epsilon > 0.0) || !std::isfinite(c.epsilon)) throw ConfigError("sinkhorn.epsilon must be > 0");
  if (c.max_iterations < 1) throw ConfigError("sinkhorn.max_iterations must be >= 1");
  if (!(c.tolerance > 0.0)) throw ConfigError("sinkhorn.tolerance must be > 0");
}

}  // namespace unpaired
