#pragma once

#include <torch/torch.h>

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace unpaired {

struct LossTerm {
  std::string name;
  double value = 0.0;   // before weighting
  double weight = 1.0;
  double weighted() const { return weight * value; }
};

/// Every term of one step's objective, in the order it was added.
struct LossBundle {
  std::vector<LossTerm> terms;
  double objective = 0.0;  // value of the tensor that was backpropagated
  bool aborted = false;    // non-finite objective, no parameter was changed
  std::optional<bool> sinkhorn_converged;

  void add(std::string name, double value, double weight);
  /// Sum of weighted terms.
  double total() const;
  bool has(const std::string& name) const;
  /// Throws StateError for an unknown name.
  const LossTerm& term(const std::string& name) const;
  double value(const std::string& name) const { return term(name).value; }
  void merge(const LossBundle& other);
  nlohmann::json to_json() const;
};

/// Accumulates a differentiable objective while recording each term in a bundle.
class Objective {
 public:
  explicit Objective(LossBundle& bundle) : bundle_(&bundle) {}
  /// Records `t` (a scalar) under `name` and adds weight * t to the objective.
  void add(const std::string& name, const torch::Tensor& t, double weight);
  bool empty() const { return !sum_.defined(); }
  const torch::Tensor& tensor() const { return sum_; }

 private:
  LossBundle* bundle_;
  torch::Tensor sum_;
};

}  // namespace unpaired
