#include "unpaired/data/array_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "unpaired/errors.hpp"

static_assert(std::endian::native == std::endian::little, "raw arrays assume a little-endian host");

namespace unpaired {

namespace {
constexpr std::array<char, 4> kMagic{'U', 'P', 'A', 'R'};
}

void write_array(const std::filesystem::path& path, const torch::Tensor& t) {
  uint8_t dtype;
  torch::Tensor c;
  if (t.scalar_type() == torch::kInt64) {
    dtype = 1;
    c = t.contiguous();
  } else {
    dtype = 0;
    c = t.to(torch::kFloat32).contiguous();
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  const uint8_t rank = static_cast<uint8_t>(c.dim());
  const uint16_t pad = 0;
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  out.write(reinterpret_cast<const char*>(&rank), 1);
  out.write(reinterpret_cast<const char*>(&pad), 2);
  for (int64_t d : c.sizes()) out.write(reinterpret_cast<const char*>(&d), sizeof(d));
  out.write(static_cast<const char*>(c.data_ptr()), static_cast<std::streamsize>(c.nbytes()));
  if (!out) throw IoError("short write to " + path.string());
}

torch::Tensor read_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError(path.string() + ": not a raw array file");
  uint8_t dtype = 0, rank = 0;
  uint16_t pad = 0;
  in.read(reinterpret_cast<char*>(&dtype), 1);
  in.read(reinterpret_cast<char*>(&rank), 1);
  in.read(reinterpret_cast<char*>(&pad), 2);
  if (dtype > 1) throw FormatError(path.string() + ": unknown dtype tag");
  std::vector<int64_t> dims(rank);
  for (auto& d : dims) {
    in.read(reinterpret_cast<char*>(&d), sizeof(d));
    if (d < 0) throw FormatError(path.string() + ": negative dimension");
  }
  if (!in) throw IoError(path.string() + ": truncated header");
  auto t = torch::empty(dims, dtype == 1 ? torch::kInt64 : torch::kFloat32);
  in.read(static_cast<char*>(t.data_ptr()), static_cast<std::streamsize>(t.nbytes()));
  if (in.gcount() != static_cast<std::streamsize>(t.nbytes())) throw IoError(path.string() + ": truncated payload");
  return t;
}

uint64_t tensor_hash(const torch::Tensor& t, uint64_t seed) {
  auto c = t.contiguous();
  const auto* p = static_cast<const unsigned char*>(c.data_ptr());
  uint64_t h = seed;
  for (size_t i = 0; i < c.nbytes(); ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace unpaired
