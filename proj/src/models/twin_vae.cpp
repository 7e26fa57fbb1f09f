#include "unpaired/models/twin_vae.hpp"

#include "unpaired/errors.hpp"
#include "unpaired/losses/losses.hpp"

namespace unpaired {

namespace {

torch::Tensor mse(const torch::Tensor& a, const torch::Tensor& b) { return (a - b).pow(2).mean(); }

}  // namespace

TwinVaeModel::TwinVaeModel(const ModelConfig& cfg, uint64_t seed)
    : TranslationModel(cfg, seed),
      E_A(build_vae_encoder(cfg.arch, init_gen_)),
      E_B(build_vae_encoder(cfg.arch, init_gen_)),
      D_A(build_vae_decoder(cfg.arch, init_gen_)),
      D_B(build_vae_decoder(cfg.arch, init_gen_)),
      opt_ea_(make_optimizer(*E_A)),
      opt_eb_(make_optimizer(*E_B)),
      opt_da_(make_optimizer(*D_A)),
      opt_db_(make_optimizer(*D_B)) {
  if (!is_twin_vae(cfg.variant)) throw ConfigError("not a twin-VAE variant: " + std::string(to_string(cfg.variant)));
  if (cfg.variant == Variant::Aligned) {
    algn_a2b = build_alignment(cfg.arch, init_gen_);
    algn_b2a = build_alignment(cfg.arch, init_gen_);
    opt_a2b_.emplace(make_optimizer(*algn_a2b));
    opt_b2a_.emplace(make_optimizer(*algn_b2a));
  }
  if (cfg.consistency) {
    aux_A = build_vae_decoder(cfg.arch, init_gen_);
    aux_B = build_vae_decoder(cfg.arch, init_gen_);
    opt_aux_a_.emplace(make_optimizer(*aux_A));
    opt_aux_b_.emplace(make_optimizer(*aux_B));
  }
}

std::vector<std::pair<std::string, NetBase*>> TwinVaeModel::nets() {
  std::vector<std::pair<std::string, NetBase*>> n{
      {"E_A", E_A.get()}, {"D_A", D_A.get()}, {"E_B", E_B.get()}, {"D_B", D_B.get()}};
  if (algn_a2b) {
    n.emplace_back("ALGN_A2B", algn_a2b.get());
    n.emplace_back("ALGN_B2A", algn_b2a.get());
  }
  if (aux_A) {
    n.emplace_back("AUX_A", aux_A.get());
    n.emplace_back("AUX_B", aux_B.get());
  }
  return n;
}

bool TwinVaeModel::strict() const {
  return cfg_.variant == Variant::SequentialStrict || cfg_.variant == Variant::InterleavingStrict;
}

double TwinVaeModel::recon_weight(const torch::Tensor& x) const {
  return cfg_.vae.recon_reduction == "sum" ? static_cast<double>(x[0].numel()) : 1.0;
}

double TwinVaeModel::mirror_weight() const {
  return cfg_.vae.recon_reduction == "sum" ? static_cast<double>(cfg_.arch.latent_z) : 1.0;
}

void TwinVaeModel::add_self_terms(Objective& obj, const torch::Tensor& x, const torch::Tensor& y) {
  const double beta = cfg_.vae.beta;
  const auto ga = E_A->forward(x);
  obj.add("recon_A", ihl(D_A->forward(reparameterize(ga, rng_).codes), x), recon_weight(x));
  obj.add("kl_A", kl_std_normal(ga), beta);
  const auto gb = E_B->forward(y);
  obj.add("recon_B", ihl(D_B->forward(reparameterize(gb, rng_).codes), y), recon_weight(y));
  obj.add("kl_B", kl_std_normal(gb), beta);
}

void TwinVaeModel::add_sequential_cycle(Objective& obj, const torch::Tensor& x, const torch::Tensor& y) {
  const double beta = cfg_.vae.beta;
  // A: x -> E_B -> D_B -> E_A -> D_A
  const auto g_in_a = E_B->forward(x);
  const auto t_a = D_B->forward(reparameterize(g_in_a, rng_).codes);
  const auto g_out_a = E_A->forward(t_a);
  const auto c_a = D_A->forward(reparameterize(g_out_a, rng_).codes);
  obj.add("cyc_recon_A", ihl(c_a, x), recon_weight(x));
  obj.add("cyc_kl_in_A", kl_std_normal(g_in_a), beta);
  obj.add("cyc_kl_out_A", kl_std_normal(g_out_a), beta);
  // B: y -> E_A -> D_A -> E_B -> D_B
  const auto g_in_b = E_A->forward(y);
  const auto t_b = D_A->forward(reparameterize(g_in_b, rng_).codes);
  const auto g_out_b = E_B->forward(t_b);
  const auto c_b = D_B->forward(reparameterize(g_out_b, rng_).codes);
  obj.add("cyc_recon_B", ihl(c_b, y), recon_weight(y));
  obj.add("cyc_kl_in_B", kl_std_normal(g_in_b), beta);
  obj.add("cyc_kl_out_B", kl_std_normal(g_out_b), beta);
}

void TwinVaeModel::add_interleaving_cycle(Objective& obj, const torch::Tensor& x, const torch::Tensor& y) {
  const double beta = cfg_.vae.beta;
  // A: x -> E_A -> D_B -> E_B -> D_A; D_B(E_A(x)) is the translation
  const auto g_in_a = E_A->forward(x);
  const auto t_a = D_B->forward(reparameterize(g_in_a, rng_).codes);
  const auto g_out_a = E_B->forward(t_a);
  const auto c_a = D_A->forward(reparameterize(g_out_a, rng_).codes);
  obj.add("cyc_recon_A", ihl(c_a, x), recon_weight(x));
  obj.add("cyc_kl_in_A", kl_std_normal(g_in_a), beta);
  obj.add("cyc_kl_out_A", kl_std_normal(g_out_a), beta);
  const auto g_in_b = E_B->forward(y);
  const auto t_b = D_A->forward(reparameterize(g_in_b, rng_).codes);
  const auto g_out_b = E_A->forward(t_b);
  const auto c_b = D_B->forward(reparameterize(g_out_b, rng_).codes);
  obj.add("cyc_recon_B", ihl(c_b, y), recon_weight(y));
  obj.add("cyc_kl_in_B", kl_std_normal(g_in_b), beta);
  obj.add("cyc_kl_out_B", kl_std_normal(g_out_b), beta);
  if (cfg_.consistency) {
    add_consistency(obj, t_a, Domain::B, "A");
    add_consistency(obj, t_b, Domain::A, "B");
  }
}

void TwinVaeModel::add_consistency(Objective& obj, const torch::Tensor& t, Domain target, const std::string& suffix) {
  auto& aux = target == Domain::A ? *aux_A : *aux_B;
  FreezeGuard fixed{&aux};
  const auto back = aux.forward(encoder(target).encode_mean(t));
  obj.add("consistency_" + suffix, mse(t, back), recon_weight(t));
}

void TwinVaeModel::add_aux_terms(Objective& obj, const torch::Tensor& x, const torch::Tensor& y) {
  torch::Tensor za, zb;
  {
    torch::NoGradGuard ng;
    za = E_A->encode_mean(x);
    zb = E_B->encode_mean(y);
  }
  obj.add("aux_recon_A", ihl(aux_A->forward(za), x), recon_weight(x));
  obj.add("aux_recon_B", ihl(aux_B->forward(zb), y), recon_weight(y));
}

LossBundle TwinVaeModel::two_phase(const ImageBatch& x, const ImageBatch& y, StepOptions opts, bool interleaving) {
  require_domain(x, Domain::A, "twin-VAE step");
  require_domain(y, Domain::B, "twin-VAE step");
  std::vector<NesterovAdadelta*> all{&opt_ea_, &opt_eb_, &opt_da_, &opt_db_};
  if (opt_aux_a_) {
    all.push_back(&*opt_aux_a_);
    all.push_back(&*opt_aux_b_);
  }
  auto add_cycle = [&](Objective& obj) {
    if (interleaving)
      add_interleaving_cycle(obj, x.data, y.data);
    else
      add_sequential_cycle(obj, x.data, y.data);
  };
  LossBundle bundle;
  if (!strict()) {
    Objective obj(bundle);
    if (opts.self_terms) {
      add_self_terms(obj, x.data, y.data);
      if (cfg_.consistency) add_aux_terms(obj, x.data, y.data);
    }
    if (opts.cycle_terms) add_cycle(obj);
    apply(obj, bundle, all);
    return bundle;
  }
  if (opts.self_terms) {
    Objective self(bundle);
    add_self_terms(self, x.data, y.data);
    if (cfg_.consistency) add_aux_terms(self, x.data, y.data);
    if (!apply(self, bundle, all)) return bundle;
  }
  if (opts.cycle_terms) {
    // strict: the cycle may only move the encoders (sequential) or the decoders (interleaving)
    std::vector<NesterovAdadelta*> moving;
    std::vector<NetBase*> fixed;
    if (interleaving) {
      fixed = {E_A.get(), E_B.get()};
      moving = {&opt_da_, &opt_db_};
    } else {
      fixed = {D_A.get(), D_B.get()};
      moving = {&opt_ea_, &opt_eb_};
    }
    FreezeGuard guard(fixed);
    Objective cyc(bundle);
    add_cycle(cyc);
    apply(cyc, bundle, moving);
  }
  return bundle;
}

LossBundle TwinVaeModel::sequential_step(const ImageBatch& x, const ImageBatch& y, StepOptions opts) {
  if (cfg_.variant != Variant::Sequential && cfg_.variant != Variant::SequentialStrict)
    throw StateError("sequential_step on a " + std::string(to_string(cfg_.variant)) + " model");
  return two_phase(x, y, opts, false);
}

LossBundle TwinVaeModel::interleaving_step(const ImageBatch& x, const ImageBatch& y, StepOptions opts) {
  if (cfg_.variant != Variant::Interleaving && cfg_.variant != Variant::InterleavingStrict)
    throw StateError("interleaving_step on a " + std::string(to_string(cfg_.variant)) + " model");
  return two_phase(x, y, opts, true);
}

LossBundle TwinVaeModel::aligned_step(const ImageBatch& x, const ImageBatch& y) {
  if (cfg_.variant != Variant::Aligned) throw StateError("aligned_step needs the aligned variant");
  if (!vaes_pretrained) throw StateError("aligned_step before the VAEs were pretrained");
  require_domain(x, Domain::A, "aligned_step");
  require_domain(y, Domain::B, "aligned_step");
  FreezeGuard fixed{E_A.get(), D_A.get(), E_B.get(), D_B.get()};
  set_frozen(*algn_a2b, false);
  set_frozen(*algn_b2a, false);
  const double beta = cfg_.vae.beta;
  LossBundle bundle;
  Objective obj(bundle);

  const auto ga = E_A->forward(x.data);
  const auto za = reparameterize(ga, rng_).codes;
  const auto za2b = algn_a2b->forward(za);
  const auto g_back_a = E_B->forward(D_B->forward(za2b));
  const auto c_a = D_A->forward(algn_b2a->forward(reparameterize(g_back_a, rng_).codes));
  obj.add("cyc_recon_A", ihl(c_a, x.data), recon_weight(x.data));

  const auto gb = E_B->forward(y.data);
  const auto zb = reparameterize(gb, rng_).codes;
  const auto zb2a = algn_b2a->forward(zb);
  const auto g_back_b = E_A->forward(D_A->forward(zb2a));
  const auto c_b = D_B->forward(algn_a2b->forward(reparameterize(g_back_b, rng_).codes));
  obj.add("cyc_recon_B", ihl(c_b, y.data), recon_weight(y.data));

  // the aligned code is the aligned posterior mean with the encoder's variance
  obj.add("algnprior_A", kl_std_normal({algn_a2b->forward(ga.mean), ga.logvar}), beta);
  obj.add("algnprior_B", kl_std_normal({algn_b2a->forward(gb.mean), gb.logvar}), beta);
  obj.add("mirror_A", mirror_loss(za, algn_b2a->forward(za2b)), mirror_weight());
  obj.add("mirror_B", mirror_loss(zb, algn_a2b->forward(zb2a)), mirror_weight());
  apply(obj, bundle, {&*opt_a2b_, &*opt_b2a_});
  return bundle;
}

LossBundle TwinVaeModel::step(const ImageBatch& x, const ImageBatch& y) {
  switch (cfg_.variant) {
    case Variant::Sequential:
    case Variant::SequentialStrict:
      return sequential_step(x, y);
    case Variant::Interleaving:
    case Variant::InterleavingStrict:
      return interleaving_step(x, y);
    case Variant::Aligned:
      return aligned_step(x, y);
    default:
      throw StateError("not a twin-VAE variant");
  }
}

LossBundle TwinVaeModel::vae_step(Domain d, const ImageBatch& batch) {
  require_domain(batch, d, "vae_step");
  const auto tag = std::string(to_string(d));
  LossBundle bundle;
  Objective obj(bundle);
  const auto g = encoder(d).forward(batch.data);
  obj.add("recon_" + tag, ihl(decoder(d).forward(reparameterize(g, rng_).codes), batch.data),
          recon_weight(batch.data));
  obj.add("kl_" + tag, kl_std_normal(g), cfg_.vae.beta);
  apply(obj, bundle, {&enc_opt(d), &dec_opt(d)});
  return bundle;
}

LossBundle TwinVaeModel::pretrain_step(const ImageBatch& x, const ImageBatch& y) {
  auto bundle = vae_step(Domain::A, x);
  bundle.merge(vae_step(Domain::B, y));
  return bundle;
}

torch::Tensor TwinVaeModel::translate(const torch::Tensor& x, Direction d) {
  torch::NoGradGuard ng;
  const bool a2b = d == Direction::A2B;
  auto& target_dec = a2b ? *D_B : *D_A;
  switch (cfg_.variant) {
    case Variant::Sequential:
    case Variant::SequentialStrict:
      return target_dec.forward((a2b ? *E_B : *E_A).encode_mean(x));
    case Variant::Interleaving:
    case Variant::InterleavingStrict:
      return target_dec.forward((a2b ? *E_A : *E_B).encode_mean(x));
    case Variant::Aligned:
      return a2b ? D_B->forward(algn_a2b->forward(E_A->encode_mean(x)))
                 : D_A->forward(algn_b2a->forward(E_B->encode_mean(x)));
    default:
      throw StateError("not a twin-VAE variant");
  }
}

torch::Tensor TwinVaeModel::cycle(const torch::Tensor& x, Direction d) {
  return translate(translate(x, d), d == Direction::A2B ? Direction::B2A : Direction::A2B);
}

std::optional<torch::Tensor> TwinVaeModel::reconstruct(const torch::Tensor& x, Domain d) {
  torch::NoGradGuard ng;
  return decoder(d).forward(encoder(d).encode_mean(x));
}

std::optional<torch::Tensor> TwinVaeModel::decode_prior(const torch::Tensor& z, Domain d) {
  torch::NoGradGuard ng;
  return decoder(d).forward(z);
}

nlohmann::json TwinVaeModel::state() const {
  auto j = TranslationModel::state();
  j["vaes_pretrained"] = vaes_pretrained;
  return j;
}

void TwinVaeModel::load_state(const nlohmann::json& j) {
  TranslationModel::load_state(j);
  vaes_pretrained = j.value("vaes_pretrained", false);
}

}  // namespace unpaired
