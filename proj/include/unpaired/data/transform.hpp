#pragma once

#include <torch/torch.h>

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace unpaired {

struct Invert {
  bool operator==(const Invert&) const = default;
};
/// Counter-clockwise rotation about the image center, in degrees.
struct Rotate {
  double degrees = 0.0;
  bool operator==(const Rotate&) const = default;
};
struct HFlip {
  bool operator==(const HFlip&) const = default;
};
struct VFlip {
  bool operator==(const VFlip&) const = default;
};
/// Scale about the image center by (sx horizontally, sy vertically), resampled onto the original grid.
struct Stretch {
  double sx = 1.25;
  double sy = 0.8;
  bool operator==(const Stretch&) const = default;
};

using TransformOp = std::variant<Invert, Rotate, HFlip, VFlip, Stretch>;

/// Ordered recipe that derives a synthetic domain from source images.
struct TransformSpec {
  std::vector<TransformOp> ops;

  bool empty() const { return ops.empty(); }
  bool operator==(const TransformSpec&) const = default;

  /// Parses "invert,rotate:90,hflip" / "stretch:1.25:0.8". Empty or "none" gives the identity.
  /// Throws ConfigError on unknown tokens or bad parameters.
  static TransformSpec parse(std::string_view text);
  std::string to_string() const;
};

/// Applies every op in order to one C x H x W image in [0,1]; output has the same shape.
/// Geometric resampling fills outside the source grid with the background of the
/// un-inverted image, so inversion commutes with rotation and stretch.
/// Throws NumericError if resampling produced a non-finite pixel.
torch::Tensor apply_transform(const torch::Tensor& image, const TransformSpec& spec);

/// apply_transform over every image of an N x C x H x W batch.
torch::Tensor apply_transform_batch(const torch::Tensor& images, const TransformSpec& spec);

}  // namespace unpaired
