#pragma once

#include <array>
#include <json.hpp>

namespace unpaired {

/// Widths, dilations and head sizes of the encoder/decoder/critic family.
struct ArchConfig {
  int image_channels = 1;
  int image_size = 28;
  std::array<int, 3> widths{64, 128, 256};
  std::array<int, 3> dilations{3, 2, 1};
  int critic_z = 10;
  int latent_z = 100;
  int deconv_kernel = 4;
  int alignment_width = 256;

  /// Spatial size after the two stride-2 pools.
  int bottleneck_size() const { return ((image_size + 1) / 2 + 1) / 2; }

  bool operator==(const ArchConfig&) const = default;
};

void to_json(nlohmann::json& j, const ArchConfig& c);
void from_json(const nlohmann::json& j, ArchConfig& c);

/// Throws ConfigError when a field is out of range.
void validate(const ArchConfig& c);

}  // namespace unpaired
