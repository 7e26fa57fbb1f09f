#pragma once

#include <torch/torch.h>

#include <filesystem>

namespace unpaired {

// Raw array file: "UPAR" magic, u8 dtype (0 = f32, 1 = i64), u8 rank, u16 zero,
// rank x i64 dims, then the little-endian payload.
void write_array(const std::filesystem::path& path, const torch::Tensor& t);
torch::Tensor read_array(const std::filesystem::path& path);

/// FNV-1a over the raw bytes of a contiguous tensor.
uint64_t tensor_hash(const torch::Tensor& t, uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace unpaired
