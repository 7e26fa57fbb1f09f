#pragma once

#include <torch/torch.h>

#include <string_view>

namespace unpaired {

enum class Domain { A, B };

inline constexpr std::string_view to_string(Domain d) { return d == Domain::A ? "A" : "B"; }
inline constexpr Domain other(Domain d) { return d == Domain::A ? Domain::B : Domain::A; }

enum class Direction { A2B, B2A };

inline constexpr std::string_view to_string(Direction d) { return d == Direction::A2B ? "A2B" : "B2A"; }
inline constexpr Domain source_domain(Direction d) { return d == Direction::A2B ? Domain::A : Domain::B; }

/// n x C x H x W images in [0,1] drawn from one domain.
struct ImageBatch {
  torch::Tensor data;
  Domain domain = Domain::A;

  int64_t size() const { return data.size(0); }
};

/// n x Z latent codes.
struct LatentBatch {
  torch::Tensor codes;
};

/// Diagonal Gaussian posterior, both n x Z.
struct GaussianParams {
  torch::Tensor mean;
  torch::Tensor logvar;
};

}  // namespace unpaired
