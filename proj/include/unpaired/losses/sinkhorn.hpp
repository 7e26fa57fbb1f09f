#pragma once

#include <torch/torch.h>

#include "unpaired/losses/configs.hpp"

namespace unpaired {

struct SinkhornResult {
  torch::Tensor loss;  // <plan, cost>, differentiable through the unrolled iterations
  torch::Tensor plan;  // n x m
  int iterations = 0;
  bool converged = false;
  double marginal_error = 0.0;  // max |row sum - 1/n| of the returned plan
};

/// Entropy-regularized optimal transport between uniform point clouds r (n x Z) and
/// q (m x Z) with cosine-dissimilarity cost, solved by log-domain Sinkhorn scaling.
/// Runs in float64 internally. Without convergence the best iterate is returned with
/// converged = false and a warning is logged.
SinkhornResult sinkhorn_loss(const torch::Tensor& r, const torch::Tensor& q, const SinkhornConfig& cfg);

/// Same solver on an explicit cost matrix.
SinkhornResult sinkhorn_from_cost(const torch::Tensor& cost, const SinkhornConfig& cfg);

struct NormalizedSinkhorn {
  torch::Tensor loss;
  bool converged = true;
  int iterations = 0;  // sum over the three solves
};

/// 2 S(R,Q) - S(R,R) - S(Q,Q).
NormalizedSinkhorn normalized_sinkhorn(const torch::Tensor& r, const torch::Tensor& q, const SinkhornConfig& cfg);

}  // namespace unpaired
