#include "unpaired/train/optimizer.hpp"

#include "unpaired/errors.hpp"

namespace unpaired {

void to_json(nlohmann::json& j, const OptimizerSpec& s) {
  j = {{"type", s.type}, {"lr", s.lr}, {"rho", s.rho}, {"eps", s.eps}, {"momentum", s.momentum}};
}

void from_json(const nlohmann::json& j, OptimizerSpec& s) {
  OptimizerSpec d;
  s.type = j.value("type", d.type);
  s.lr = j.value("lr", d.lr);
  s.rho = j.value("rho", d.rho);
  s.eps = j.value("eps", d.eps);
  s.momentum = j.value("momentum", d.momentum);
}

void validate(const OptimizerSpec& s) {
  if (s.type != "nesterov_adadelta" && s.type != "adadelta")
    throw ConfigError("optimizer.type must be nesterov_adadelta or adadelta, got '" + s.type + "'");
  if (!(s.lr > 0)) throw ConfigError("optimizer.lr must be > 0");
  if (!(s.rho >= 0 && s.rho < 1)) throw ConfigError("optimizer.rho must be in [0, 1)");
  if (!(s.eps > 0)) throw ConfigError("optimizer.eps must be > 0");
  if (!(s.momentum >= 0 && s.momentum < 1)) throw ConfigError("optimizer.momentum must be in [0, 1)");
}

NesterovAdadelta::NesterovAdadelta(std::vector<torch::Tensor> params, OptimizerSpec spec)
    : params_(std::move(params)), spec_(std::move(spec)) {
  validate(spec_);
  if (spec_.type == "adadelta") spec_.momentum = 0.0;
  state_.resize(params_.size());
}

void NesterovAdadelta::step() {
  torch::NoGradGuard no_grad;
  const double rho = spec_.rho, eps = spec_.eps, mu = spec_.momentum;
  for (size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    const auto& g = p.grad();
    if (!g.defined()) continue;
    auto& s = state_[i];
    if (!s.square_avg.defined()) {
      s.square_avg = torch::zeros_like(p);
      s.acc_delta = torch::zeros_like(p);
      if (mu > 0) s.velocity = torch::zeros_like(p);
    }
    s.square_avg.mul_(rho).addcmul_(g, g, 1 - rho);
    const auto delta = (s.acc_delta + eps).sqrt_().div_((s.square_avg + eps).sqrt_()).mul_(g);
    s.acc_delta.mul_(rho).addcmul_(delta, delta, 1 - rho);
    if (mu > 0) {
      s.velocity.mul_(mu).add_(delta);
      p.sub_(delta.add(s.velocity, mu), spec_.lr);
    } else {
      p.sub_(delta, spec_.lr);
    }
  }
}

void NesterovAdadelta::zero_grad() {
  for (auto& p : params_) p.mutable_grad() = torch::Tensor();
}

}  // namespace unpaired
