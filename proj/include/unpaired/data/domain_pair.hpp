#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <optional>

#include "unpaired/data/mnist.hpp"
#include "unpaired/data/transform.hpp"
#include "unpaired/tensor_types.hpp"

namespace unpaired {

/// Two unaligned image sets. Source indices are kept only for leakage audits;
/// nothing here exposes a correspondence between the sides.
struct DomainPairDataset {
  ImageCollection domain_a;
  ImageCollection domain_b;
  TransformSpec spec_a;
  TransformSpec spec_b;
  torch::Tensor source_indices_a;  // int64, index into the source collection
  torch::Tensor source_indices_b;

  const ImageCollection& domain(Domain d) const { return d == Domain::A ? domain_a : domain_b; }
  /// Leading `n` images of each side (or all of them when smaller).
  DomainPairDataset head(int64_t n) const;
};

/// Splits `src` into two disjoint halves by a seeded shuffle, then derives domain A
/// with `spec_a` and domain B with `spec_b`. Throws SizeError below two images.
DomainPairDataset make_domain_pair(const ImageCollection& src, const TransformSpec& spec_a,
                                   const TransformSpec& spec_b, uint64_t split_seed);

/// Draws n images from each side with independent seeded streams.
/// Throws SizeError if n exceeds either side.
std::pair<ImageBatch, ImageBatch> sample_unpaired_batch(const DomainPairDataset& ds, int64_t n, uint64_t seed);

/// Epoch-wise unpaired minibatches: each side is permuted independently per epoch.
class UnpairedSampler {
 public:
  UnpairedSampler(const DomainPairDataset& ds, int64_t batch_size, uint64_t seed);

  int64_t batches_per_epoch() const { return batches_; }
  void start_epoch(int64_t epoch);
  std::pair<ImageBatch, ImageBatch> batch(int64_t index) const;
  /// Source-collection indices behind the last permutation (for routing assertions in tests).
  const std::vector<int64_t>& order(Domain d) const { return d == Domain::A ? order_a_ : order_b_; }

 private:
  const DomainPairDataset* ds_;
  int64_t batch_size_;
  uint64_t seed_;
  int64_t batches_;
  std::vector<int64_t> order_a_, order_b_;
};

/// Prepared dataset directory: train and held-out pairs derived from MNIST train/test.
struct PreparedData {
  DomainPairDataset train;
  DomainPairDataset test;
  uint64_t seed = 0;
};

/// Loads MNIST from `mnist_dir`, builds the train/test domain pairs.
PreparedData prepare_from_mnist(const std::filesystem::path& mnist_dir, const TransformSpec& spec_a,
                                const TransformSpec& spec_b, uint64_t seed, std::optional<int64_t> limit = {});

/// Cache layout: manifest.json plus raw float32/int64 arrays (see array_io.hpp).
void save_prepared(const PreparedData& data, const std::filesystem::path& dir);
PreparedData load_prepared(const std::filesystem::path& dir);

}  // namespace unpaired
