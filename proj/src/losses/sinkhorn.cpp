#include "unpaired/losses/sinkhorn.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "unpaired/errors.hpp"
#include "unpaired/losses/losses.hpp"
#include "unpaired/util/log.hpp"

namespace unpaired {

SinkhornResult sinkhorn_from_cost(const torch::Tensor& cost, const SinkhornConfig& cfg) {
  validate(cfg);
  if (cost.dim() != 2 || cost.size(0) < 1 || cost.size(1) < 1) throw SizeError("sinkhorn: empty cost matrix");
  const auto out_dtype = cost.scalar_type();
  const auto c = cost.to(torch::kFloat64);
  const int64_t n = c.size(0), m = c.size(1);
  const double eps = cfg.epsilon;
  const double log_a = -std::log(static_cast<double>(n));
  const double log_b = -std::log(static_cast<double>(m));

  auto f = torch::zeros({n, 1}, c.options());
  auto g = torch::zeros({1, m}, c.options());
  torch::Tensor best_f = f, best_g = g;
  double best_err = std::numeric_limits<double>::infinity();
  int iters = 0;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    f = eps * log_a - eps * torch::logsumexp((g - c) / eps, 1, true);
    g = eps * log_b - eps * torch::logsumexp((f - c) / eps, 0, true);
    iters = it + 1;
    // columns are exact after the g update; rows measure the remaining violation
    double err;
    {
      torch::NoGradGuard ng;
      const auto rows = torch::exp((f + g - c) / eps).sum(1);
      err = (rows - 1.0 / n).abs().max().item<double>();
    }
    if (err < best_err) {
      best_err = err;
      best_f = f;
      best_g = g;
    }
    if (err <= cfg.tolerance) break;
  }
  SinkhornResult res;
  res.plan = torch::exp((best_f + best_g - c) / eps);
  res.loss = (res.plan * c).sum().to(out_dtype);
  res.iterations = iters;
  res.marginal_error = best_err;
  res.converged = best_err <= cfg.tolerance;
  if (!res.converged) {
    std::ostringstream msg;
    msg << "sinkhorn: no convergence after " << iters << " iterations, marginal error " << std::setprecision(3)
        << best_err;
    static std::atomic<long> site{0};
    log_warning_sparse(site, msg.str());
  }
  return res;
}

SinkhornResult sinkhorn_loss(const torch::Tensor& r, const torch::Tensor& q, const SinkhornConfig& cfg) {
  if (r.dim() != 2 || q.dim() != 2 || r.size(0) < 1 || q.size(0) < 1)
    throw SizeError("sinkhorn: point clouds must be non-empty n x Z");
  const auto cost = cosine_cost_matrix(r.to(torch::kFloat64), q.to(torch::kFloat64));
  auto res = sinkhorn_from_cost(cost, cfg);
  res.loss = res.loss.to(r.scalar_type());
  return res;
}

NormalizedSinkhorn normalized_sinkhorn(const torch::Tensor& r, const torch::Tensor& q, const SinkhornConfig& cfg) {
  const auto rq = sinkhorn_loss(r, q, cfg);
  const auto rr = sinkhorn_loss(r, r, cfg);
  const auto qq = sinkhorn_loss(q, q, cfg);
  NormalizedSinkhorn out;
  out.loss = 2.0 * rq.loss - rr.loss - qq.loss;
  out.converged = rq.converged && rr.converged && qq.converged;
  out.iterations = rq.iterations + rr.iterations + qq.iterations;
  return out;
}

}  // namespace unpaired
