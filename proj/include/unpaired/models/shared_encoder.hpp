#pragma once

#include "unpaired/models/model.hpp"
#include "unpaired/nn/architectures.hpp"

namespace unpaired {

/// One deterministic encoder for both domains, a decoder per domain, and normalized
/// Sinkhorn divergences to a prior sample as the adherence terms.
class SharedEncoderModel : public TranslationModel {
 public:
  SharedEncoderModel(const ModelConfig& cfg, uint64_t seed);

  /// z_prior: standard normal cloud with at least as many rows as the batch.
  LossBundle shared_step(const ImageBatch& x, const ImageBatch& y, const LatentBatch& z_prior);
  /// Draws z_prior from the model's generator.
  LossBundle step(const ImageBatch& x, const ImageBatch& y);

  std::vector<std::pair<std::string, NetBase*>> nets() override;
  torch::Tensor translate(const torch::Tensor& x, Direction d) override;
  torch::Tensor cycle(const torch::Tensor& x, Direction d) override;
  std::optional<torch::Tensor> reconstruct(const torch::Tensor& x, Domain d) override;
  std::optional<torch::Tensor> decode_prior(const torch::Tensor& z, Domain d) override;

  using TranslationModel::cycle;
  using TranslationModel::translate;

  VaeDecoder& decoder(Domain d) { return d == Domain::A ? *D_A : *D_B; }

  std::shared_ptr<VaeEncoder> E;
  std::shared_ptr<VaeDecoder> D_A, D_B;

 private:
  NesterovAdadelta opt_e_, opt_da_, opt_db_;
};

}  // namespace unpaired
