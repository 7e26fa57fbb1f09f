#include "unpaired/data/domain_pair.hpp"

#include <fstream>
#include <json.hpp>

#include "unpaired/data/array_io.hpp"
#include "unpaired/errors.hpp"
#include "unpaired/util/rng.hpp"

namespace unpaired {

namespace {

constexpr uint64_t kStreamA = 0xA;
constexpr uint64_t kStreamB = 0xB;
constexpr int kFormatVersion = 1;

ImageCollection subset(const ImageCollection& c, const torch::Tensor& idx) {
  ImageCollection out;
  out.images = c.images.index_select(0, idx);
  if (c.labels) out.labels = c.labels->index_select(0, idx);
  return out;
}

std::vector<int64_t> partial_permutation(int64_t n, int64_t k, uint64_t seed) {
  std::vector<int64_t> idx(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (int64_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<int64_t>(bounded(rng, static_cast<uint64_t>(n - i)));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  idx.resize(static_cast<size_t>(k));
  return idx;
}

torch::Tensor to_index_tensor(const std::vector<int64_t>& v) {
  return torch::tensor(v, torch::kInt64);
}

}  // namespace

DomainPairDataset DomainPairDataset::head(int64_t n) const {
  DomainPairDataset out = *this;
  const auto na = std::min(n, domain_a.size());
  const auto nb = std::min(n, domain_b.size());
  out.domain_a = subset(domain_a, torch::arange(na));
  out.domain_b = subset(domain_b, torch::arange(nb));
  out.source_indices_a = source_indices_a.slice(0, 0, na);
  out.source_indices_b = source_indices_b.slice(0, 0, nb);
  return out;
}

DomainPairDataset make_domain_pair(const ImageCollection& src, const TransformSpec& spec_a,
                                   const TransformSpec& spec_b, uint64_t split_seed) {
  const int64_t n = src.size();
  if (n < 2) throw SizeError("need at least 2 images to split into two domains");
  const auto perm = seeded_permutation(n, split_seed);
  const int64_t half = n / 2;
  std::vector<int64_t> ia(perm.begin(), perm.begin() + half);
  std::vector<int64_t> ib(perm.begin() + half, perm.begin() + 2 * half);

  DomainPairDataset ds;
  ds.spec_a = spec_a;
  ds.spec_b = spec_b;
  ds.source_indices_a = to_index_tensor(ia);
  ds.source_indices_b = to_index_tensor(ib);
  ds.domain_a = subset(src, ds.source_indices_a);
  ds.domain_b = subset(src, ds.source_indices_b);
  ds.domain_a.images = apply_transform_batch(ds.domain_a.images, spec_a);
  ds.domain_b.images = apply_transform_batch(ds.domain_b.images, spec_b);
  return ds;
}

std::pair<ImageBatch, ImageBatch> sample_unpaired_batch(const DomainPairDataset& ds, int64_t n, uint64_t seed) {
  if (n < 1 || n > ds.domain_a.size() || n > ds.domain_b.size())
    throw SizeError("batch size " + std::to_string(n) + " exceeds a domain (A=" + std::to_string(ds.domain_a.size()) +
                    ", B=" + std::to_string(ds.domain_b.size()) + ")");
  const auto ia = partial_permutation(ds.domain_a.size(), n, derive_seed(seed, kStreamA));
  const auto ib = partial_permutation(ds.domain_b.size(), n, derive_seed(seed, kStreamB));
  return {ImageBatch{ds.domain_a.images.index_select(0, to_index_tensor(ia)), Domain::A},
          ImageBatch{ds.domain_b.images.index_select(0, to_index_tensor(ib)), Domain::B}};
}

UnpairedSampler::UnpairedSampler(const DomainPairDataset& ds, int64_t batch_size, uint64_t seed)
    : ds_(&ds), batch_size_(batch_size), seed_(seed) {
  if (batch_size < 1 || batch_size > ds.domain_a.size() || batch_size > ds.domain_b.size())
    throw SizeError("batch size " + std::to_string(batch_size) + " exceeds a domain");
  batches_ = std::min(ds.domain_a.size(), ds.domain_b.size()) / batch_size;
  start_epoch(0);
}

void UnpairedSampler::start_epoch(int64_t epoch) {
  const auto s = derive_seed(seed_, static_cast<uint64_t>(epoch));
  order_a_ = seeded_permutation(ds_->domain_a.size(), derive_seed(s, kStreamA));
  order_b_ = seeded_permutation(ds_->domain_b.size(), derive_seed(s, kStreamB));
}

std::pair<ImageBatch, ImageBatch> UnpairedSampler::batch(int64_t index) const {
  TORCH_CHECK(index >= 0 && index < batches_, "batch index out of range");
  const auto begin = static_cast<size_t>(index * batch_size_);
  const auto end = begin + static_cast<size_t>(batch_size_);
  std::vector<int64_t> ia(order_a_.begin() + static_cast<std::ptrdiff_t>(begin),
                          order_a_.begin() + static_cast<std::ptrdiff_t>(end));
  std::vector<int64_t> ib(order_b_.begin() + static_cast<std::ptrdiff_t>(begin),
                          order_b_.begin() + static_cast<std::ptrdiff_t>(end));
  return {ImageBatch{ds_->domain_a.images.index_select(0, to_index_tensor(ia)), Domain::A},
          ImageBatch{ds_->domain_b.images.index_select(0, to_index_tensor(ib)), Domain::B}};
}

PreparedData prepare_from_mnist(const std::filesystem::path& mnist_dir, const TransformSpec& spec_a,
                                const TransformSpec& spec_b, uint64_t seed, std::optional<int64_t> limit) {
  const auto files = mnist_files(mnist_dir);
  auto train = load_mnist(files.train_images, files.train_labels);
  auto test = load_mnist(files.test_images, files.test_labels);
  if (limit) {
    train = subset(train, torch::arange(std::min(*limit, train.size())));
    test = subset(test, torch::arange(std::min(*limit, test.size())));
  }
  PreparedData out;
  out.seed = seed;
  out.train = make_domain_pair(train, spec_a, spec_b, derive_seed(seed, 1));
  out.test = make_domain_pair(test, spec_a, spec_b, derive_seed(seed, 2));
  return out;
}

void save_prepared(const PreparedData& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["spec_a"] = data.train.spec_a.to_string();
  manifest["spec_b"] = data.train.spec_b.to_string();
  manifest["seed"] = data.seed;
  for (const auto* split : {"train", "test"}) {
    const auto& ds = std::string(split) == "train" ? data.train : data.test;
    nlohmann::ordered_json counts;
    counts["A"] = ds.domain_a.size();
    counts["B"] = ds.domain_b.size();
    manifest["counts"][split] = counts;
    for (Domain d : {Domain::A, Domain::B}) {
      const std::string stem = std::string(split) + "_" + std::string(to_string(d));
      const auto& c = ds.domain(d);
      write_array(dir / (stem + "_images.bin"), c.images);
      write_array(dir / (stem + "_source_indices.bin"), d == Domain::A ? ds.source_indices_a : ds.source_indices_b);
      if (c.labels) write_array(dir / (stem + "_labels.bin"), *c.labels);
    }
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

PreparedData load_prepared(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) throw IoError("no dataset manifest at " + manifest_path.string());
  nlohmann::json manifest;
  try {
    std::ifstream(manifest_path) >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format_version", 0) != kFormatVersion) throw FormatError("unsupported dataset format version");
  PreparedData out;
  out.seed = manifest.at("seed").get<uint64_t>();
  const auto spec_a = TransformSpec::parse(manifest.at("spec_a").get<std::string>());
  const auto spec_b = TransformSpec::parse(manifest.at("spec_b").get<std::string>());
  for (const auto* split : {"train", "test"}) {
    auto& ds = std::string(split) == "train" ? out.train : out.test;
    ds.spec_a = spec_a;
    ds.spec_b = spec_b;
    for (Domain d : {Domain::A, Domain::B}) {
      const std::string stem = std::string(split) + "_" + std::string(to_string(d));
      ImageCollection c;
      c.images = read_array(dir / (stem + "_images.bin"));
      if (std::filesystem::exists(dir / (stem + "_labels.bin"))) c.labels = read_array(dir / (stem + "_labels.bin"));
      auto idx = read_array(dir / (stem + "_source_indices.bin"));
      if (c.size() != manifest.at("counts").at(split).at(std::string(to_string(d))).get<int64_t>())
        throw FormatError("dataset array count does not match manifest for " + stem);
      (d == Domain::A ? ds.domain_a : ds.domain_b) = std::move(c);
      (d == Domain::A ? ds.source_indices_a : ds.source_indices_b) = idx;
    }
  }
  return out;
}

}  // namespace unpaired
