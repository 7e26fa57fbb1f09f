#include "unpaired/nn/checkpoint.hpp"

#include <bit>
#include <fstream>

#include "unpaired/errors.hpp"

namespace unpaired {

static_assert(std::endian::native == std::endian::little, "raw parameter files are little-endian");

namespace {

namespace fs = std::filesystem;

std::string file_for(const std::string& name) { return name + ".f32"; }

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed " + path.string() + ": " + e.what());
  }
}

}  // namespace

void save_network(const NetBase& net, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::json params = nlohmann::json::array();
  for (const auto& item : net.named_parameters()) {
    const auto t = item.value().detach().to(torch::kFloat32).contiguous();
    const auto file = file_for(item.key());
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / file).string());
    out.write(reinterpret_cast<const char*>(t.data_ptr<float>()), static_cast<std::streamsize>(t.numel() * 4));
    if (!out) throw IoError("short write on " + (dir / file).string());
    params.push_back({{"name", item.key()}, {"shape", t.sizes().vec()}, {"dtype", "float32"}, {"file", file}});
  }
  nlohmann::json m = {{"format_version", kNetFormatVersion},
                      {"kind", net.kind()},
                      {"role", std::string(to_string(net.role()))},
                      {"arch", net.arch()},
                      {"parameters", params}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << m.dump(2) << '\n';
}

nlohmann::json read_network_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  if (!fs::exists(path)) throw IoError("missing network manifest " + path.string());
  auto m = read_json(path);
  if (!m.is_object() || m.value("format_version", 0) != kNetFormatVersion)
    throw FormatError("unsupported network manifest version in " + path.string());
  return m;
}

void load_network(NetBase& net, const fs::path& dir) {
  const auto m = read_network_manifest(dir);
  try {
    if (m.at("kind").get<std::string>() != net.kind())
      throw FormatError("checkpoint holds a " + m.at("kind").get<std::string>() + ", expected " + net.kind());
    if (m.at("role").get<std::string>() != to_string(net.role()))
      throw FormatError("checkpoint role " + m.at("role").get<std::string>() + " does not match");
    if (nlohmann::json(net.arch()) != m.at("arch")) throw FormatError("checkpoint architecture does not match");
    auto named = net.named_parameters();
    const auto& params = m.at("parameters");
    if (params.size() != named.size()) throw FormatError("checkpoint parameter count does not match");
    torch::NoGradGuard no_grad;
    size_t i = 0;
    for (auto& item : named) {
      const auto& e = params[i++];
      if (e.at("name").get<std::string>() != item.key())
        throw FormatError("checkpoint parameter " + e.at("name").get<std::string>() + " where " + item.key() +
                          " expected");
      if (e.at("shape").get<std::vector<int64_t>>() != item.value().sizes().vec())
        throw FormatError("checkpoint shape mismatch for " + item.key());
      const auto path = dir / e.at("file").get<std::string>();
      std::ifstream in(path, std::ios::binary | std::ios::ate);
      if (!in) throw IoError("missing parameter file " + path.string());
      const auto bytes = static_cast<int64_t>(in.tellg());
      auto buf = torch::empty(item.value().sizes(), torch::kFloat32);
      if (bytes != buf.numel() * 4) throw FormatError("parameter file " + path.string() + " has wrong size");
      in.seekg(0);
      in.read(reinterpret_cast<char*>(buf.data_ptr<float>()), bytes);
      if (!in) throw IoError("short read on " + path.string());
      item.value().copy_(buf);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("malformed network manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace unpaired
