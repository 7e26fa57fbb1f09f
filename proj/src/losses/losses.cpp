#include "unpaired/losses/losses.hpp"

#include <cmath>

#include "unpaired/errors.hpp"
#include "unpaired/nn/architectures.hpp"
#include "unpaired/util/log.hpp"

namespace unpaired {

namespace {

void require_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (a.sizes() != b.sizes())
    throw SizeError(std::string(what) + ": shape mismatch " + c10::str(a.sizes()) + " vs " + c10::str(b.sizes()));
}

}  // namespace

torch::Tensor ihl(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "ihl");
  const auto d = a - b;
  const auto ad = d.abs();
  return torch::where(ad > 1.0, d * d, ad).mean();
}

torch::Tensor wgan_critic_loss(const torch::Tensor& scores_fake, const torch::Tensor& scores_real) {
  return scores_fake.mean() - scores_real.mean();
}

torch::Tensor wgan_generator_loss(const torch::Tensor& scores_fake) { return -scores_fake.mean(); }

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               double exponent, const torch::Tensor& mix) {
  require_same_shape(real, fake, "gradient_penalty");
  if (mix.numel() != real.size(0)) throw SizeError("gradient_penalty: one mixing coefficient per sample");
  torch::AutoGradMode grad_on(true);
  std::vector<int64_t> mshape(real.dim(), 1);
  mshape[0] = real.size(0);
  const auto m = mix.to(real.dtype()).reshape(mshape);
  auto u = m * real + (1 - m) * fake;
  if (!u.requires_grad()) u = u.detach().requires_grad_(true);
  const auto scores = critic(u);
  const auto g = torch::autograd::grad({scores.sum()}, {u}, {}, /*retain_graph=*/true, /*create_graph=*/true)[0];
  const auto sq = g.flatten(1).pow(2).sum(1);
  return sq.pow(exponent / 2.0).mean();
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const GanConfig& cfg, torch::Generator& gen) {
  const auto mix = torch::rand({real.size(0)}, gen, torch::TensorOptions().dtype(real.dtype()));
  return gradient_penalty(critic, real, fake, cfg.penalty_exponent, mix);
}

torch::Tensor loss_gradient_penalty(const torch::Tensor& loss, const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> live;
  for (const auto& p : params)
    if (p.requires_grad()) live.push_back(p);
  if (live.empty()) return torch::zeros({}, loss.options());
  const auto grads = torch::autograd::grad({loss}, live, {}, /*retain_graph=*/true, /*create_graph=*/true,
                                           /*allow_unused=*/true);
  torch::Tensor total = torch::zeros({}, loss.options());
  for (const auto& g : grads)
    if (g.defined()) total = total + g.pow(2).sum();
  return total;
}

torch::Tensor kl_std_normal(const GaussianParams& g) {
  require_same_shape(g.mean, g.logvar, "kl_std_normal");
  const auto per_dim = g.mean.pow(2) + g.logvar.exp() - 1.0 - g.logvar;
  return 0.5 * per_dim.flatten(1).sum(1).mean();
}

LatentBatch reparameterize(const GaussianParams& g, torch::Generator& gen) {
  require_same_shape(g.mean, g.logvar, "reparameterize");
  const auto eta = torch::randn(g.mean.sizes(), gen, g.mean.options().requires_grad(false));
  return {g.mean + torch::exp(0.5 * g.logvar) * eta};
}

double cosine_dissimilarity(const torch::Tensor& a, const torch::Tensor& b) {
  require_same_shape(a, b, "cosine_dissimilarity");
  const auto ad = a.to(torch::kFloat64).flatten();
  const auto bd = b.to(torch::kFloat64).flatten();
  const double na = ad.norm().item<double>();
  const double nb = bd.norm().item<double>();
  if (na == 0.0 || nb == 0.0) {
    log_warning("cosine_dissimilarity: zero vector, using 1");
    return 1.0;
  }
  return 1.0 - ad.dot(bd).item<double>() / (na * nb);
}

torch::Tensor cosine_cost_matrix(const torch::Tensor& r, const torch::Tensor& q) {
  if (r.dim() != 2 || q.dim() != 2 || r.size(1) != q.size(1))
    throw SizeError("cosine_cost_matrix: expected n x Z and m x Z");
  const auto rn = r.norm(2, 1, true);
  const auto qn = q.norm(2, 1, true);
  // zero rows normalize to zero and cost exactly 1
  const auto rh = r / rn.clamp_min(1e-30);
  const auto qh = q / qn.clamp_min(1e-30);
  return 1.0 - rh.matmul(qh.t());
}

torch::Tensor minmax_per_sample(const torch::Tensor& maps) {
  const auto flat = maps.flatten(1);
  const auto lo = std::get<0>(flat.min(1, true));
  const auto hi = std::get<0>(flat.max(1, true));
  const auto span = hi - lo;
  const auto out = torch::where(span > 0, (flat - lo) / span.clamp_min(1e-30), torch::zeros_like(flat));
  return out.view(maps.sizes());
}

HeatMap heatmap(Classifier& classifier, const torch::Tensor& x) {
  torch::NoGradGuard no_grad;
  const auto contrib = classifier.spatial_contributions(classifier.features(x)).abs().unsqueeze(1);
  namespace F = torch::nn::functional;
  const auto up = F::interpolate(contrib, F::InterpolateFuncOptions()
                                              .size(std::vector<int64_t>{x.size(2), x.size(3)})
                                              .mode(torch::kBilinear)
                                              .align_corners(false));
  return {minmax_per_sample(up)};
}

torch::Tensor similarity_loss(const torch::Tensor& x, const torch::Tensor& gx, const HeatMap& h) {
  require_same_shape(x, gx, "similarity_loss");
  if (h.map.size(0) != x.size(0) || h.map.size(2) != x.size(2) || h.map.size(3) != x.size(3))
    throw SizeError("similarity_loss: heat map does not match images");
  return ((1.0 - h.map) * (x - gx).abs()).mean();
}

torch::Tensor classifier_loss(const torch::Tensor& p_a, const torch::Tensor& p_b) {
  const auto pa = p_a.clamp(kProbClamp, 1.0 - kProbClamp);
  const auto pb = p_b.clamp(kProbClamp, 1.0 - kProbClamp);
  return -torch::log(pa).mean() - torch::log(1.0 - pb).mean();
}

torch::Tensor mirror_loss(const torch::Tensor& z, const torch::Tensor& z_roundtrip) {
  require_same_shape(z, z_roundtrip, "mirror_loss");
  return (z - z_roundtrip).pow(2).mean();
}

}  // namespace unpaired
