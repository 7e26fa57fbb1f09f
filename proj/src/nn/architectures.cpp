#include "unpaired/nn/architectures.hpp"

#include "unpaired/errors.hpp"

namespace unpaired {

namespace {

UnitSpec conv_unit(int64_t in, int64_t out, int64_t kernel, int64_t dilation) {
  UnitSpec u;
  u.conv.in_channels = in;
  u.conv.out_channels = out;
  u.conv.kernel = kernel;
  u.conv.dilation = dilation;
  u.conv.dirac = in == out;
  return u;
}

UnitSpec deconv_unit(int64_t in, int64_t out, int64_t kernel) {
  auto u = conv_unit(in, out, kernel, 1);
  u.upsample = true;
  return u;
}

UnitSpec output_unit(int64_t in, int64_t channels) {
  auto u = conv_unit(in, channels, 3, 1);
  u.conv.bias = true;
  u.norm = false;
  u.act = Activation::HardTanh01;
  return u;
}

// Upward path from w2 x r x r to C x H x W.
torch::nn::Sequential make_up_path(const ArchConfig& cfg) {
  const auto [w0, w1, w2] = cfg.widths;
  (void)w0;
  torch::nn::Sequential up;
  up->push_back(ConvUnit(deconv_unit(w2, w2, cfg.deconv_kernel)));
  up->push_back(ConvUnit(conv_unit(w2, w2, 3, 1)));
  up->push_back(ConvUnit(deconv_unit(w2, w1, cfg.deconv_kernel)));
  up->push_back(ConvUnit(output_unit(w1, cfg.image_channels)));
  return up;
}

// Valid convolution whose kernel covers the whole bottleneck, giving out x 1 x 1.
DiracSepConv full_reduction(int64_t in, int64_t out, int64_t resolution) {
  ConvSpec s;
  s.in_channels = in;
  s.out_channels = out;
  s.kernel = resolution;
  s.padding = Padding::Valid;
  s.dirac = false;
  s.bias = true;
  return DiracSepConv(s);
}

template <class Net>
std::shared_ptr<Net> initialized(std::shared_ptr<Net> net, torch::Generator& gen) {
  init_he_selu(*net, gen);
  return net;
}

}  // namespace

torch::nn::Sequential make_down_path(const ArchConfig& cfg) {
  validate(cfg);
  torch::nn::Sequential down;
  int64_t in = cfg.image_channels;
  for (size_t stage = 0; stage < cfg.widths.size(); ++stage) {
    const int64_t w = cfg.widths[stage];
    if (stage > 0) {
      down->push_back(make_strided_pool(in, w));
      in = w;
    }
    for (int d : cfg.dilations) {
      down->push_back(ConvUnit(conv_unit(in, w, 3, d)));
      in = w;
    }
  }
  return down;
}

ImageTranslator::ImageTranslator(const ArchConfig& cfg, NetRole role) : NetBase("image_translator", role, cfg) {
  down = register_module("down", make_down_path(cfg));
  up = register_module("up", make_up_path(cfg));
}

torch::Tensor ImageTranslator::forward(const torch::Tensor& x) { return up->forward(down->forward(x)); }

std::vector<std::vector<int64_t>> ImageTranslator::stage_shapes(const torch::Tensor& x) {
  torch::NoGradGuard ng;
  std::vector<std::vector<int64_t>> shapes{x.sizes().vec()};
  auto h = x;
  for (auto* path : {&down, &up}) {
    for (auto& m : **path) {
      h = m.forward(h);
      if (h.size(2) != shapes.back()[2]) shapes.push_back(h.sizes().vec());
    }
  }
  return shapes;
}

Critic::Critic(const ArchConfig& cfg) : NetBase("critic", NetRole::Critic, cfg) {
  down = register_module("down", make_down_path(cfg));
  head = register_module("head", ConvUnit(conv_unit(cfg.widths[2], cfg.critic_z, 3, 1)));
  reduce = register_module("reduce", full_reduction(cfg.critic_z, cfg.critic_z, cfg.bottleneck_size()));
}

torch::Tensor Critic::forward(const torch::Tensor& x) {
  auto z = reduce->forward(head->forward(down->forward(x)));
  return z.flatten(1).mean(1);
}

Classifier::Classifier(const ArchConfig& cfg) : NetBase("classifier", NetRole::Classifier, cfg) {
  down = register_module("down", make_down_path(cfg));
  head = register_module("head", ConvUnit(conv_unit(cfg.widths[2], cfg.critic_z, 3, 1)));
  reduce = register_module("reduce", full_reduction(cfg.critic_z, cfg.critic_z, cfg.bottleneck_size()));
  out = register_module("out", torch::nn::Linear(cfg.critic_z, 1));
}

torch::Tensor Classifier::features(const torch::Tensor& x) { return head->forward(down->forward(x)); }

torch::Tensor Classifier::logit_from_features(const torch::Tensor& feats) {
  return out->forward(reduce->forward(feats).flatten(1)).squeeze(1);
}

torch::Tensor Classifier::spatial_contributions(const torch::Tensor& feats) {
  // logit = v . (P (K * F) + b) + c, so position (h, w) contributes sum_z (v P)_z K_z(h,w) F_z(h,w).
  const auto z = feats.size(1);
  auto channel_weight = torch::matmul(out->weight, reduce->pointwise.view({z, z}));  // 1 x Z
  auto kernel = reduce->depthwise.view({1, z, feats.size(2), feats.size(3)});
  return (channel_weight.view({1, z, 1, 1}) * kernel * feats).sum(1);
}

VaeEncoder::VaeEncoder(const ArchConfig& cfg, bool stochastic)
    : NetBase(stochastic ? "vae_encoder" : "latent_encoder", NetRole::Encoder, cfg), stochastic_(stochastic) {
  down = register_module("down", make_down_path(cfg));
  mean_head = register_module("mean_head", full_reduction(cfg.widths[2], cfg.latent_z, cfg.bottleneck_size()));
  if (stochastic)
    logvar_head = register_module("logvar_head", full_reduction(cfg.widths[2], cfg.latent_z, cfg.bottleneck_size()));
}

GaussianParams VaeEncoder::forward(const torch::Tensor& x) {
  auto h = down->forward(x);
  auto mean = mean_head->forward(h).flatten(1);
  auto logvar = stochastic_ ? logvar_head->forward(h).flatten(1) : torch::zeros_like(mean);
  return {mean, logvar};
}

torch::Tensor VaeEncoder::encode_mean(const torch::Tensor& x) { return mean_head->forward(down->forward(x)).flatten(1); }

VaeDecoder::VaeDecoder(const ArchConfig& cfg) : NetBase("vae_decoder", NetRole::Decoder, cfg) {
  const int64_t r = cfg.bottleneck_size();
  project = register_module("project", torch::nn::Linear(cfg.latent_z, cfg.widths[2] * r * r));
  up = register_module("up", make_up_path(cfg));
}

torch::Tensor VaeDecoder::forward(const torch::Tensor& z) {
  const int64_t r = arch().bottleneck_size();
  auto h = torch::selu(project->forward(z)).view({z.size(0), arch().widths[2], r, r});
  return up->forward(h);
}

AlignmentMlp::AlignmentMlp(const ArchConfig& cfg) : NetBase("alignment_mlp", NetRole::Alignment, cfg) {
  fc1 = register_module("fc1", torch::nn::Linear(cfg.latent_z, cfg.alignment_width));
  fc2 = register_module("fc2", torch::nn::Linear(cfg.alignment_width, cfg.latent_z));
}

torch::Tensor AlignmentMlp::forward(const torch::Tensor& z) { return z + fc2->forward(torch::selu(fc1->forward(z))); }

void AlignmentMlp::make_identity() {
  torch::NoGradGuard no_grad;
  fc2->weight.zero_();
  fc2->bias.zero_();
}

std::shared_ptr<ImageTranslator> build_generator(const ArchConfig& cfg, torch::Generator& gen, NetRole role) {
  return initialized(std::make_shared<ImageTranslator>(cfg, role), gen);
}

std::shared_ptr<Critic> build_critic(const ArchConfig& cfg, torch::Generator& gen) {
  return initialized(std::make_shared<Critic>(cfg), gen);
}

std::shared_ptr<Classifier> build_classifier(const ArchConfig& cfg, torch::Generator& gen) {
  return initialized(std::make_shared<Classifier>(cfg), gen);
}

std::shared_ptr<VaeEncoder> build_vae_encoder(const ArchConfig& cfg, torch::Generator& gen, bool stochastic) {
  auto enc = initialized(std::make_shared<VaeEncoder>(cfg, stochastic), gen);
  if (stochastic) {
    // start the posterior near unit variance
    torch::NoGradGuard no_grad;
    enc->logvar_head->pointwise.mul_(0.1);
    enc->logvar_head->depthwise.mul_(0.1);
  }
  return enc;
}

std::shared_ptr<VaeDecoder> build_vae_decoder(const ArchConfig& cfg, torch::Generator& gen) {
  return initialized(std::make_shared<VaeDecoder>(cfg), gen);
}

std::shared_ptr<AlignmentMlp> build_alignment(const ArchConfig& cfg, torch::Generator& gen) {
  auto net = initialized(std::make_shared<AlignmentMlp>(cfg), gen);
  torch::NoGradGuard no_grad;
  net->fc2->weight.mul_(1e-2);
  return net;
}

}  // namespace unpaired
