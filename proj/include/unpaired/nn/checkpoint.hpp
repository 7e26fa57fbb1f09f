#pragma once

#include <filesystem>

#include <json.hpp>

#include "unpaired/nn/network.hpp"

namespace unpaired {

inline constexpr int kNetFormatVersion = 1;

/// Writes `dir/manifest.json` (kind, role, arch, parameter names/shapes) and one raw
/// little-endian float32 file per named parameter.
void save_network(const NetBase& net, const std::filesystem::path& dir);

/// Loads parameters into an already-built network. Throws IoError when files are missing
/// and FormatError when kind, role, architecture, names or shapes disagree.
void load_network(NetBase& net, const std::filesystem::path& dir);

nlohmann::json read_network_manifest(const std::filesystem::path& dir);

}  // namespace unpaired
