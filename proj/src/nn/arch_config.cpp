#include "unpaired/nn/arch_config.hpp"

#include "unpaired/errors.hpp"

namespace unpaired {

void to_json(nlohmann::json& j, const ArchConfig& c) {
  j = nlohmann::json{{"image_channels", c.image_channels}, {"image_size", c.image_size},
                     {"widths", c.widths},                 {"dilations", c.dilations},
                     {"critic_z", c.critic_z},             {"latent_z", c.latent_z},
                     {"deconv_kernel", c.deconv_kernel},   {"alignment_width", c.alignment_width}};
}

void from_json(const nlohmann::json& j, ArchConfig& c) {
  ArchConfig d;
  c.image_channels = j.value("image_channels", d.image_channels);
  c.image_size = j.value("image_size", d.image_size);
  c.widths = j.value("widths", d.widths);
  c.dilations = j.value("dilations", d.dilations);
  c.critic_z = j.value("critic_z", d.critic_z);
  c.latent_z = j.value("latent_z", d.latent_z);
  c.deconv_kernel = j.value("deconv_kernel", d.deconv_kernel);
  c.alignment_width = j.value("alignment_width", d.alignment_width);
}

void validate(const ArchConfig& c) {
  if (c.image_channels < 1 || c.image_size < 4 || c.image_size % 4 != 0)
    throw ConfigError("image needs >= 1 channel and a size that is a positive multiple of 4");
  for (int w : c.widths)
    if (w < 1) throw ConfigError("feature widths must be positive");
  for (int d : c.dilations)
    if (d < 1) throw ConfigError("dilations must be positive");
  if (c.critic_z < 1 || c.latent_z < 1 || c.deconv_kernel < 1 || c.alignment_width < 1)
    throw ConfigError("head sizes must be positive");
}

}  // namespace unpaired
