#pragma once

#include <torch/torch.h>

#include <functional>

#include "unpaired/losses/configs.hpp"
#include "unpaired/tensor_types.hpp"

namespace unpaired {

class Classifier;

/// Inverted Huber loss: per element |d| when |d| <= 1, d^2 beyond; mean over all elements.
/// Throws SizeError on shape mismatch.
torch::Tensor ihl(const torch::Tensor& a, const torch::Tensor& b);

/// mean(fake) - mean(real). Negative means the critic separates generated from target.
torch::Tensor wgan_critic_loss(const torch::Tensor& scores_fake, const torch::Tensor& scores_real);

/// -mean(fake).
torch::Tensor wgan_generator_loss(const torch::Tensor& scores_fake);

using CriticFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// Mean over samples of ||grad_u D(u)||^p at u = mix * real + (1 - mix) * fake, with one
/// mixing coefficient per sample. Built with create_graph so it can be differentiated
/// w.r.t. the critic's parameters or, through `fake`, w.r.t. the generator.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               double exponent, const torch::Tensor& mix);

/// As above with mix ~ U(0,1) drawn from `gen`.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               const GanConfig& cfg, torch::Generator& gen);

/// ||grad_params loss||^2, differentiable w.r.t. the parameters.
torch::Tensor loss_gradient_penalty(const torch::Tensor& loss, const std::vector<torch::Tensor>& params);

/// Mean over samples of 1/2 sum_dims (mu^2 + sigma^2 - 1 - log sigma^2).
torch::Tensor kl_std_normal(const GaussianParams& g);

/// z = mu + exp(logvar / 2) * eta, eta ~ N(0, I) from `gen`.
LatentBatch reparameterize(const GaussianParams& g, torch::Generator& gen);

/// 1 - a.b / (|a| |b|); a zero vector gives 1 and logs a warning.
double cosine_dissimilarity(const torch::Tensor& a, const torch::Tensor& b);

/// Pairwise cosine dissimilarity between rows of r (n x Z) and q (m x Z). Zero rows cost 1.
torch::Tensor cosine_cost_matrix(const torch::Tensor& r, const torch::Tensor& q);

/// n x 1 x H x W in [0,1].
struct HeatMap {
  torch::Tensor map;
};

/// |per-position logit contribution| of the classifier, bilinearly upsampled to the
/// image size and min-max normalized per sample. A flat map comes out all zero.
HeatMap heatmap(Classifier& classifier, const torch::Tensor& x);

/// Normalizes each sample's map to [0,1]; constant maps become zero.
torch::Tensor minmax_per_sample(const torch::Tensor& maps);

/// mean((1 - h) * |x - gx|): the cold part of the heat map is kept similar.
torch::Tensor similarity_loss(const torch::Tensor& x, const torch::Tensor& gx, const HeatMap& h);

/// Binary cross-entropy pushing C -> 1 on domain A and C -> 0 on domain B; probabilities
/// are clamped to [1e-7, 1 - 1e-7].
torch::Tensor classifier_loss(const torch::Tensor& p_a, const torch::Tensor& p_b);

inline constexpr double kProbClamp = 1e-7;

/// mean over all elements of (z - z_roundtrip)^2.
torch::Tensor mirror_loss(const torch::Tensor& z, const torch::Tensor& z_roundtrip);

}  // namespace unpaired
