#pragma once

#include <torch/torch.h>

#include <json.hpp>
#include <string>
#include <vector>

namespace unpaired {

struct OptimizerSpec {
  std::string type = "nesterov_adadelta";  // or "adadelta"
  double lr = 1.0;
  double rho = 0.9;
  double eps = 1e-6;
  double momentum = 0.9;  // ignored by plain adadelta
};

void to_json(nlohmann::json& j, const OptimizerSpec& s);
void from_json(const nlohmann::json& j, OptimizerSpec& s);
void validate(const OptimizerSpec& s);

/// Adadelta whose per-step update is passed through a Nesterov momentum buffer:
///   E[g^2] <- rho E[g^2] + (1-rho) g^2
///   d      <- sqrt(E[d^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[d^2] <- rho E[d^2] + (1-rho) d^2
///   v      <- mu v + d
///   theta  <- theta - lr (d + mu v)
/// Parameters without a gradient (frozen or unused) are left untouched, state included.
class NesterovAdadelta {
 public:
  NesterovAdadelta(std::vector<torch::Tensor> params, OptimizerSpec spec);

  void step();
  /// Drops every gradient so the next backward starts clean.
  void zero_grad();
  const OptimizerSpec& spec() const { return spec_; }

 private:
  struct State {
    torch::Tensor square_avg, acc_delta, velocity;
  };
  std::vector<torch::Tensor> params_;
  std::vector<State> state_;
  OptimizerSpec spec_;
};

}  // namespace unpaired
