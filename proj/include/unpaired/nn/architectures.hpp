#pragma once

#include <torch/torch.h>

#include <memory>

#include "unpaired/nn/blocks.hpp"
#include "unpaired/nn/network.hpp"
#include "unpaired/tensor_types.hpp"

namespace unpaired {

/// Downward path shared by every image-consuming network:
/// 3conv(w0), pool, 3conv(w1), pool, 3conv(w2), with dilations per R-block.
torch::nn::Sequential make_down_path(const ArchConfig& cfg);

/// Image-to-image network (the 1-GAN's encoder G and decoder F).
/// Upward path: deconv(w2), conv(w2), deconv(w1), conv(C) with a hardtanh(0,1) head.
class ImageTranslator : public NetBase {
 public:
  ImageTranslator(const ArchConfig& cfg, NetRole role);
  torch::Tensor forward(const torch::Tensor& x);
  /// Activation shape at the input and after every change of resolution.
  std::vector<std::vector<int64_t>> stage_shapes(const torch::Tensor& x);

  torch::nn::Sequential down{nullptr}, up{nullptr};
};

/// Critic backbone + 1conv(Z) + full-resolution reduction to Z x 1 x 1; score = mean over Z.
class Critic : public NetBase {
 public:
  explicit Critic(const ArchConfig& cfg);
  /// One scalar per sample.
  torch::Tensor forward(const torch::Tensor& x);

  torch::nn::Sequential down{nullptr};
  ConvUnit head{nullptr};
  DiracSepConv reduce{nullptr};
};

/// Same trunk as the critic, then a scalar logit over the Z x 1 x 1 vector.
class Classifier : public NetBase {
 public:
  explicit Classifier(const ArchConfig& cfg);

  /// Z x r x r maps before the spatial reduction.
  torch::Tensor features(const torch::Tensor& x);
  torch::Tensor logit_from_features(const torch::Tensor& feats);
  torch::Tensor logit(const torch::Tensor& x) { return logit_from_features(features(x)); }
  /// Probability that x comes from domain A.
  torch::Tensor forward(const torch::Tensor& x) { return torch::sigmoid(logit(x)); }

  /// Exact decomposition of the logit over spatial positions (n x r x r); the logit equals
  /// the sum of this map plus a constant.
  torch::Tensor spatial_contributions(const torch::Tensor& feats);

  torch::nn::Sequential down{nullptr};
  ConvUnit head{nullptr};
  DiracSepConv reduce{nullptr};
  torch::nn::Linear out{nullptr};
};

/// Critic trunk with Gaussian heads (mean, log-variance), or a single deterministic head.
class VaeEncoder : public NetBase {
 public:
  VaeEncoder(const ArchConfig& cfg, bool stochastic = true);
  GaussianParams forward(const torch::Tensor& x);
  /// Mean head only.
  torch::Tensor encode_mean(const torch::Tensor& x);
  bool stochastic() const { return stochastic_; }

  torch::nn::Sequential down{nullptr};
  DiracSepConv mean_head{nullptr}, logvar_head{nullptr};

 private:
  bool stochastic_;
};

/// Latent -> affine projection to w2 x r x r -> translator's upward path.
class VaeDecoder : public NetBase {
 public:
  explicit VaeDecoder(const ArchConfig& cfg);
  torch::Tensor forward(const torch::Tensor& z);

  torch::nn::Linear project{nullptr};
  torch::nn::Sequential up{nullptr};
};

/// Two-layer perceptron on latent codes, residual so it starts near the identity:
///   f(z) = z + W2 selu(W1 z + b1) + b2.
class AlignmentMlp : public NetBase {
 public:
  explicit AlignmentMlp(const ArchConfig& cfg);
  torch::Tensor forward(const torch::Tensor& z);
  /// Zeroes the second layer so the map is exactly the identity.
  void make_identity();

  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};

std::shared_ptr<ImageTranslator> build_generator(const ArchConfig& cfg, torch::Generator& gen,
                                                 NetRole role = NetRole::Encoder);
std::shared_ptr<Critic> build_critic(const ArchConfig& cfg, torch::Generator& gen);
std::shared_ptr<Classifier> build_classifier(const ArchConfig& cfg, torch::Generator& gen);
std::shared_ptr<VaeEncoder> build_vae_encoder(const ArchConfig& cfg, torch::Generator& gen, bool stochastic = true);
std::shared_ptr<VaeDecoder> build_vae_decoder(const ArchConfig& cfg, torch::Generator& gen);
std::shared_ptr<AlignmentMlp> build_alignment(const ArchConfig& cfg, torch::Generator& gen);

}  // namespace unpaired
