#include "unpaired/models/loss_bundle.hpp"

#include "unpaired/errors.hpp"

namespace unpaired {

void LossBundle::add(std::string name, double value, double weight) {
  if (has(name)) throw StateError("loss term '" + name + "' recorded twice");
  terms.push_back({std::move(name), value, weight});
}

double LossBundle::total() const {
  double s = 0.0;
  for (const auto& t : terms) s += t.weighted();
  return s;
}

bool LossBundle::has(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return true;
  return false;
}

const LossTerm& LossBundle::term(const std::string& name) const {
  for (const auto& t : terms)
    if (t.name == name) return t;
  throw StateError("no loss term '" + name + "'");
}

void LossBundle::merge(const LossBundle& other) {
  for (const auto& t : other.terms) add(t.name, t.value, t.weight);
  objective += other.objective;
  aborted = aborted || other.aborted;
  if (other.sinkhorn_converged)
    sinkhorn_converged = sinkhorn_converged.value_or(true) && *other.sinkhorn_converged;
}

nlohmann::json LossBundle::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& t : terms) j[t.name] = {{"value", t.value}, {"weight", t.weight}};
  return j;
}

void Objective::add(const std::string& name, const torch::Tensor& t, double weight) {
  if (t.numel() != 1) throw SizeError("loss term '" + name + "' is not a scalar");
  bundle_->add(name, t.item<double>(), weight);
  const auto w = weight * t;
  sum_ = sum_.defined() ? sum_ + w : w;
}

}  // namespace unpaired
