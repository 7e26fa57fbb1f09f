#include "unpaired/models/shared_encoder.hpp"

#include "unpaired/errors.hpp"
#include "unpaired/losses/losses.hpp"
#include "unpaired/losses/sinkhorn.hpp"

namespace unpaired {

SharedEncoderModel::SharedEncoderModel(const ModelConfig& cfg, uint64_t seed)
    : TranslationModel(cfg, seed),
      E(build_vae_encoder(cfg.arch, init_gen_, /*stochastic=*/false)),
      D_A(build_vae_decoder(cfg.arch, init_gen_)),
      D_B(build_vae_decoder(cfg.arch, init_gen_)),
      opt_e_(make_optimizer(*E)),
      opt_da_(make_optimizer(*D_A)),
      opt_db_(make_optimizer(*D_B)) {}

std::vector<std::pair<std::string, NetBase*>> SharedEncoderModel::nets() {
  return {{"E", E.get()}, {"D_A", D_A.get()}, {"D_B", D_B.get()}};
}

LossBundle SharedEncoderModel::shared_step(const ImageBatch& x, const ImageBatch& y, const LatentBatch& z_prior) {
  require_domain(x, Domain::A, "shared_step");
  require_domain(y, Domain::B, "shared_step");
  const auto& z = z_prior.codes;
  if (z.dim() != 2 || z.size(1) != cfg_.arch.latent_z)
    throw SizeError("shared_step: prior sample must be n x " + std::to_string(cfg_.arch.latent_z));
  if (z.size(0) < std::max(x.size(), y.size())) throw SizeError("shared_step: prior sample smaller than the batch");
  const double beta = cfg_.vae.beta;
  const double rw = cfg_.vae.recon_reduction == "sum" ? static_cast<double>(x.data[0].numel()) : 1.0;

  LossBundle bundle;
  Objective obj(bundle);
  bool converged = true;
  auto sink = [&](const torch::Tensor& codes) {
    auto s = normalized_sinkhorn(codes, z, cfg_.sinkhorn);
    converged = converged && s.converged;
    return s.loss;
  };

  const auto ex = E->encode_mean(x.data);
  const auto ey = E->encode_mean(y.data);
  const auto sink_x = sink(ex);
  const auto sink_y = sink(ey);
  obj.add("recon_A", ihl(D_A->forward(ex), x.data), rw);
  obj.add("sink_A", sink_x, beta);
  obj.add("recon_B", ihl(D_B->forward(ey), y.data), rw);
  obj.add("sink_B", sink_y, beta);

  // A: x -> E -> D_B -> E -> D_A
  const auto e_back_a = E->encode_mean(D_B->forward(ex));
  obj.add("cyc_recon_A", ihl(D_A->forward(e_back_a), x.data), rw);
  obj.add("cyc_sink_in_A", sink_x, beta);
  obj.add("cyc_sink_out_A", sink(e_back_a), beta);
  // B: y -> E -> D_A -> E -> D_B
  const auto e_back_b = E->encode_mean(D_A->forward(ey));
  obj.add("cyc_recon_B", ihl(D_B->forward(e_back_b), y.data), rw);
  obj.add("cyc_sink_in_B", sink_y, beta);
  obj.add("cyc_sink_out_B", sink(e_back_b), beta);

  bundle.sinkhorn_converged = converged;
  apply(obj, bundle, {&opt_e_, &opt_da_, &opt_db_});
  return bundle;
}

LossBundle SharedEncoderModel::step(const ImageBatch& x, const ImageBatch& y) {
  const auto n = std::max(x.size(), y.size());
  return shared_step(x, y, {torch::randn({n, cfg_.arch.latent_z}, rng_, x.data.options())});
}

torch::Tensor SharedEncoderModel::translate(const torch::Tensor& x, Direction d) {
  torch::NoGradGuard ng;
  return (d == Direction::A2B ? *D_B : *D_A).forward(E->encode_mean(x));
}

torch::Tensor SharedEncoderModel::cycle(const torch::Tensor& x, Direction d) {
  return translate(translate(x, d), d == Direction::A2B ? Direction::B2A : Direction::A2B);
}

std::optional<torch::Tensor> SharedEncoderModel::reconstruct(const torch::Tensor& x, Domain d) {
  torch::NoGradGuard ng;
  return decoder(d).forward(E->encode_mean(x));
}

std::optional<torch::Tensor> SharedEncoderModel::decode_prior(const torch::Tensor& z, Domain d) {
  torch::NoGradGuard ng;
  return decoder(d).forward(z);
}

}  // namespace unpaired
