#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>

namespace unpaired {

/// N x C x H x W images in [0,1] with optional N labels (int64).
struct ImageCollection {
  torch::Tensor images;
  std::optional<torch::Tensor> labels;

  int64_t size() const { return images.defined() ? images.size(0) : 0; }
};

// Pixel values live on a 2^-24 lattice so that 1 - p is exact in float32 and
// intensity inversion is a true involution.
inline constexpr double kPixelLattice = 16777216.0;  // 2^24

/// Rounds every value onto the pixel lattice after clamping to [0,1].
torch::Tensor snap_pixels(const torch::Tensor& t);

/// Reads an IDX image file (magic 0x00000803) and optionally a label file (0x00000801).
/// Bytes are rescaled to [0,1]. Throws FormatError on bad magic, IoError on truncation.
ImageCollection load_mnist(const std::filesystem::path& images_path,
                           const std::optional<std::filesystem::path>& labels_path = std::nullopt);

/// Reads only the header of an IDX image file: (N, H, W).
std::array<int32_t, 3> read_idx_image_header(const std::filesystem::path& images_path);

/// Writes uint8 images (N x H x W) in IDX format. Used by tests and fixture generation.
void write_idx_images(const std::filesystem::path& path, const torch::Tensor& bytes);
void write_idx_labels(const std::filesystem::path& path, const torch::Tensor& labels);

/// Standard MNIST filenames under a directory.
struct MnistFiles {
  std::filesystem::path train_images, train_labels, test_images, test_labels;
};
MnistFiles mnist_files(const std::filesystem::path& dir);

}  // namespace unpaired
