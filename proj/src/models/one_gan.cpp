#include "unpaired/models/one_gan.hpp"

#include "unpaired/errors.hpp"
#include "unpaired/losses/losses.hpp"

namespace unpaired {

OneGanModel::OneGanModel(const ModelConfig& cfg, uint64_t seed)
    : TranslationModel(cfg, seed),
      G(build_generator(cfg.arch, init_gen_, NetRole::Encoder)),
      F(build_generator(cfg.arch, init_gen_, NetRole::Decoder)),
      D(build_critic(cfg.arch, init_gen_)),
      C(build_classifier(cfg.arch, init_gen_)),
      opt_g_(make_optimizer(*G)),
      opt_f_(make_optimizer(*F)),
      opt_d_(make_optimizer(*D)),
      opt_c_(make_optimizer(*C)) {}

std::vector<std::pair<std::string, NetBase*>> OneGanModel::nets() {
  return {{"G", G.get()}, {"F", F.get()}, {"D", D.get()}, {"C", C.get()}};
}

LossBundle OneGanModel::critic_step(const ImageBatch& x, const ImageBatch& y) {
  require_domain(x, Domain::A, "critic_step");
  require_domain(y, Domain::B, "critic_step");
  FreezeGuard fixed{G.get(), F.get(), C.get()};
  set_frozen(*D, false);
  const auto& gc = cfg_.gan;
  LossBundle bundle;
  Objective obj(bundle);
  torch::Tensor fake;
  {
    torch::NoGradGuard ng;
    fake = G->forward(x.data);
  }
  const auto ld = wgan_critic_loss(D->forward(fake), D->forward(y.data));
  obj.add("L_D", ld, 1.0);
  const CriticFn critic = [this](const torch::Tensor& u) { return D->forward(u); };
  obj.add("L_gradD", gradient_penalty(critic, y.data, fake, gc, rng_), gc.critic_penalty_weight);
  if (gc.loss_gradient_penalty)
    obj.add("L_gradLD", loss_gradient_penalty(ld, D->parameters()), gc.loss_gradient_penalty_weight);
  const double ld_value = bundle.value("L_D");
  last_critic_loss = ld_value;
  apply(obj, bundle, {&opt_d_});
  return bundle;
}

std::optional<LossBundle> OneGanModel::generator_step(const ImageBatch& x, const ImageBatch& y) {
  require_domain(x, Domain::A, "generator_step");
  require_domain(y, Domain::B, "generator_step");
  if (!last_critic_loss || !(*last_critic_loss < 0.0)) return std::nullopt;
  FreezeGuard fixed{D.get(), C.get()};
  set_frozen(*G, false);
  set_frozen(*F, false);
  const auto& gc = cfg_.gan;
  LossBundle bundle;
  Objective obj(bundle);
  const auto gx = G->forward(x.data);
  const double cyc_w = gc.cycle_reduction == "sum" ? static_cast<double>(x.data[0].numel()) : 1.0;
  obj.add("L_cyc", ihl(F->forward(gx), x.data), cyc_w);
  obj.add("L_G", wgan_generator_loss(D->forward(gx)), 1.0);
  const CriticFn critic = [this](const torch::Tensor& u) { return D->forward(u); };
  obj.add("L_gradG", gradient_penalty(critic, y.data, gx, gc, rng_), gc.generator_penalty_weight);
  obj.add("L_sim", similarity_loss(x.data, gx, heatmap(*C, x.data)), 1.0);
  apply(obj, bundle, {&opt_g_, &opt_f_});
  return bundle;
}

LossBundle OneGanModel::classifier_step(const ImageBatch& x, const ImageBatch& y) {
  require_domain(x, Domain::A, "classifier_step");
  require_domain(y, Domain::B, "classifier_step");
  FreezeGuard fixed{G.get(), F.get(), D.get()};
  set_frozen(*C, false);
  LossBundle bundle;
  Objective obj(bundle);
  obj.add("L_C", classifier_loss(C->forward(x.data), C->forward(y.data)), 1.0);
  apply(obj, bundle, {&opt_c_});
  return bundle;
}

torch::Tensor OneGanModel::translate(const torch::Tensor& x, Direction d) {
  torch::NoGradGuard ng;
  return d == Direction::A2B ? G->forward(x) : F->forward(x);
}

torch::Tensor OneGanModel::cycle(const torch::Tensor& x, Direction d) {
  torch::NoGradGuard ng;
  return d == Direction::A2B ? F->forward(G->forward(x)) : G->forward(F->forward(x));
}

nlohmann::json OneGanModel::state() const {
  auto j = TranslationModel::state();
  j["last_critic_loss"] = last_critic_loss ? nlohmann::json(*last_critic_loss) : nlohmann::json(nullptr);
  return j;
}

void OneGanModel::load_state(const nlohmann::json& j) {
  TranslationModel::load_state(j);
  last_critic_loss.reset();
  if (j.contains("last_critic_loss") && j["last_critic_loss"].is_number())
    last_critic_loss = j["last_critic_loss"].get<double>();
}

}  // namespace unpaired
