#pragma once

#include "unpaired/models/model.hpp"
#include "unpaired/nn/architectures.hpp"

namespace unpaired {

/// Which groups of terms a twin-VAE step includes.
struct StepOptions {
  bool self_terms = true;
  bool cycle_terms = true;
};

/// Two beta-VAEs, one per domain, coupled by cycle losses (sequential or interleaving
/// paths) or by alignment networks between their latent spaces.
class TwinVaeModel : public TranslationModel {
 public:
  TwinVaeModel(const ModelConfig& cfg, uint64_t seed);

  /// Dispatches on the variant: sequential_step, interleaving_step or aligned_step.
  LossBundle step(const ImageBatch& x, const ImageBatch& y);

  /// Cycle A: E_B -> D_B -> E_A -> D_A. Strict: decoders frozen for the cycle terms.
  LossBundle sequential_step(const ImageBatch& x, const ImageBatch& y, StepOptions opts = {});
  /// Cycle A: E_A -> D_B -> E_B -> D_A. Strict: encoders frozen for the cycle terms.
  LossBundle interleaving_step(const ImageBatch& x, const ImageBatch& y, StepOptions opts = {});
  /// Trains the alignment networks only. Throws StateError before pretraining is done.
  LossBundle aligned_step(const ImageBatch& x, const ImageBatch& y);

  /// Self-domain step on one VAE; the batch must carry that domain's tag.
  LossBundle vae_step(Domain d, const ImageBatch& batch);
  /// vae_step on both domains.
  LossBundle pretrain_step(const ImageBatch& x, const ImageBatch& y);
  bool vaes_pretrained = false;

  std::vector<std::pair<std::string, NetBase*>> nets() override;
  torch::Tensor translate(const torch::Tensor& x, Direction d) override;
  torch::Tensor cycle(const torch::Tensor& x, Direction d) override;
  std::optional<torch::Tensor> reconstruct(const torch::Tensor& x, Domain d) override;
  std::optional<torch::Tensor> decode_prior(const torch::Tensor& z, Domain d) override;
  nlohmann::json state() const override;
  void load_state(const nlohmann::json& j) override;

  using TranslationModel::cycle;
  using TranslationModel::translate;

  bool strict() const;
  VaeEncoder& encoder(Domain d) { return d == Domain::A ? *E_A : *E_B; }
  VaeDecoder& decoder(Domain d) { return d == Domain::A ? *D_A : *D_B; }

  std::shared_ptr<VaeEncoder> E_A, E_B;
  std::shared_ptr<VaeDecoder> D_A, D_B;
  std::shared_ptr<AlignmentMlp> algn_a2b, algn_b2a;  // aligned variant only
  std::shared_ptr<VaeDecoder> aux_A, aux_B;          // consistency term only

 private:
  void add_self_terms(Objective& obj, const torch::Tensor& x, const torch::Tensor& y);
  void add_sequential_cycle(Objective& obj, const torch::Tensor& x, const torch::Tensor& y);
  void add_interleaving_cycle(Objective& obj, const torch::Tensor& x, const torch::Tensor& y);
  void add_consistency(Objective& obj, const torch::Tensor& t, Domain target, const std::string& suffix);
  void add_aux_terms(Objective& obj, const torch::Tensor& x, const torch::Tensor& y);
  LossBundle two_phase(const ImageBatch& x, const ImageBatch& y, StepOptions opts, bool interleaving);
  double recon_weight(const torch::Tensor& x) const;
  double mirror_weight() const;
  NesterovAdadelta& enc_opt(Domain d) { return d == Domain::A ? opt_ea_ : opt_eb_; }
  NesterovAdadelta& dec_opt(Domain d) { return d == Domain::A ? opt_da_ : opt_db_; }

  NesterovAdadelta opt_ea_, opt_eb_, opt_da_, opt_db_;
  std::optional<NesterovAdadelta> opt_a2b_, opt_b2a_, opt_aux_a_, opt_aux_b_;
};

}  // namespace unpaired
