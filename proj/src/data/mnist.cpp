#include "unpaired/data/mnist.hpp"

#include <fstream>

#include "unpaired/errors.hpp"

namespace unpaired {

namespace {

constexpr uint32_t kImageMagic = 0x00000803;
constexpr uint32_t kLabelMagic = 0x00000801;

uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw IoError(path.string() + ": truncated header");
  return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) | (uint32_t{b[2]} << 8) | uint32_t{b[3]};
}

void write_be32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("missing file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

}  // namespace

torch::Tensor snap_pixels(const torch::Tensor& t) {
  return torch::round(t.clamp(0.0, 1.0) * kPixelLattice) / kPixelLattice;
}

std::array<int32_t, 3> read_idx_image_header(const std::filesystem::path& images_path) {
  auto in = open_or_throw(images_path);
  const uint32_t magic = read_be32(in, images_path);
  if (magic != kImageMagic) throw FormatError(images_path.string() + ": bad IDX image magic");
  const auto n = read_be32(in, images_path);
  const auto h = read_be32(in, images_path);
  const auto w = read_be32(in, images_path);
  return {static_cast<int32_t>(n), static_cast<int32_t>(h), static_cast<int32_t>(w)};
}

ImageCollection load_mnist(const std::filesystem::path& images_path,
                           const std::optional<std::filesystem::path>& labels_path) {
  ImageCollection out;
  {
    auto in = open_or_throw(images_path);
    if (read_be32(in, images_path) != kImageMagic) throw FormatError(images_path.string() + ": bad IDX image magic");
    const int64_t n = read_be32(in, images_path);
    const int64_t h = read_be32(in, images_path);
    const int64_t w = read_be32(in, images_path);
    auto bytes = torch::empty({n, 1, h, w}, torch::kUInt8);
    in.read(reinterpret_cast<char*>(bytes.data_ptr<uint8_t>()), static_cast<std::streamsize>(bytes.numel()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.numel()))
      throw IoError(images_path.string() + ": truncated payload");
    // byte / 255 in double, then onto the float lattice
    out.images = snap_pixels(bytes.to(torch::kFloat64) / 255.0).to(torch::kFloat32);
  }
  if (labels_path) {
    auto in = open_or_throw(*labels_path);
    if (read_be32(in, *labels_path) != kLabelMagic) throw FormatError(labels_path->string() + ": bad IDX label magic");
    const int64_t n = read_be32(in, *labels_path);
    if (n != out.size()) throw FormatError(labels_path->string() + ": label count does not match image count");
    auto bytes = torch::empty({n}, torch::kUInt8);
    in.read(reinterpret_cast<char*>(bytes.data_ptr<uint8_t>()), static_cast<std::streamsize>(n));
    if (in.gcount() != n) throw IoError(labels_path->string() + ": truncated payload");
    out.labels = bytes.to(torch::kInt64);
  }
  return out;
}

void write_idx_images(const std::filesystem::path& path, const torch::Tensor& bytes) {
  TORCH_CHECK(bytes.dim() == 3 && bytes.scalar_type() == torch::kUInt8, "expected uint8 N x H x W");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string());
  write_be32(out, kImageMagic);
  for (int i = 0; i < 3; ++i) write_be32(out, static_cast<uint32_t>(bytes.size(i)));
  auto c = bytes.contiguous();
  out.write(reinterpret_cast<const char*>(c.data_ptr<uint8_t>()), static_cast<std::streamsize>(c.numel()));
}

void write_idx_labels(const std::filesystem::path& path, const torch::Tensor& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string());
  write_be32(out, kLabelMagic);
  write_be32(out, static_cast<uint32_t>(labels.size(0)));
  auto c = labels.to(torch::kUInt8).contiguous();
  out.write(reinterpret_cast<const char*>(c.data_ptr<uint8_t>()), static_cast<std::streamsize>(c.numel()));
}

MnistFiles mnist_files(const std::filesystem::path& dir) {
  return {dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte", dir / "t10k-images-idx3-ubyte",
          dir / "t10k-labels-idx1-ubyte"};
}

}  // namespace unpaired
