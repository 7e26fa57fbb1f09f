#pragma once

#include "unpaired/models/model.hpp"
#include "unpaired/nn/architectures.hpp"

namespace unpaired {

/// Encoder G (A -> B'), decoder F (B' -> A), critic D on domain B and domain classifier C.
/// Only the A -> B' -> A cycle is trained.
class OneGanModel : public TranslationModel {
 public:
  OneGanModel(const ModelConfig& cfg, uint64_t seed);

  /// Minimizes L_D + w L_gradD over D only; records L_D (before the update) as
  /// last_critic_loss.
  LossBundle critic_step(const ImageBatch& x, const ImageBatch& y);
  /// Runs only when last_critic_loss < 0: minimizes L_cyc + L_G + w L_gradG + L_sim over
  /// G and F with D and C fixed.
  std::optional<LossBundle> generator_step(const ImageBatch& x, const ImageBatch& y);
  /// BCE on C only.
  LossBundle classifier_step(const ImageBatch& x, const ImageBatch& y);

  std::vector<std::pair<std::string, NetBase*>> nets() override;
  torch::Tensor translate(const torch::Tensor& x, Direction d) override;
  torch::Tensor cycle(const torch::Tensor& x, Direction d) override;
  std::vector<Direction> trained_directions() const override { return {Direction::A2B}; }
  nlohmann::json state() const override;
  void load_state(const nlohmann::json& j) override;

  using TranslationModel::cycle;
  using TranslationModel::translate;

  std::shared_ptr<ImageTranslator> G, F;
  std::shared_ptr<Critic> D;
  std::shared_ptr<Classifier> C;
  std::optional<double> last_critic_loss;

 private:
  NesterovAdadelta opt_g_, opt_f_, opt_d_, opt_c_;
};

}  // namespace unpaired
