#include "unpaired/nn/blocks.hpp"

#include <cmath>

#include "unpaired/errors.hpp"

namespace unpaired {

namespace {
constexpr double kSeluGain = 0.75;
}

std::array<int64_t, 2> same_padding(int64_t size, int64_t kernel, int64_t stride, int64_t dilation) {
  const int64_t out = (size + stride - 1) / stride;
  const int64_t total = std::max<int64_t>((out - 1) * stride + dilation * (kernel - 1) + 1 - size, 0);
  return {total / 2, total - total / 2};
}

DiracSepConvImpl::DiracSepConvImpl(const ConvSpec& spec) : spec_(spec) {
  if (spec.in_channels < 1 || spec.out_channels < 1 || spec.kernel < 1 || spec.stride < 1 || spec.dilation < 1)
    throw ConfigError("convolution dimensions must be positive");
  if (spec.dirac) {
    if (spec.in_channels != spec.out_channels)
      throw ConfigError("dirac identity path needs in_channels == out_channels (" + std::to_string(spec.in_channels) +
                        " vs " + std::to_string(spec.out_channels) + ")");
    if (spec.stride != 1 || spec.padding != Padding::Same)
      throw ConfigError("dirac identity path needs stride 1 and same padding");
  }
  const auto c = spec.in_channels, o = spec.out_channels, k = spec.kernel;
  if (spec.separable) {
    depthwise = register_parameter("depthwise", torch::zeros({c, 1, k, k}));
    pointwise = register_parameter("pointwise", torch::zeros({o, c, 1, 1}));
  } else {
    weight = register_parameter("weight", torch::zeros({o, c, k, k}));
  }
  if (spec.dirac) alpha = register_parameter("alpha", torch::ones({o}));
  if (spec.bias) bias = register_parameter("bias", torch::zeros({o}));
}

int64_t DiracSepConvImpl::weight_count() const {
  return spec_.separable ? depthwise.numel() + pointwise.numel() : weight.numel();
}

torch::Tensor DiracSepConvImpl::forward(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != spec_.in_channels)
    throw ConfigError("convolution expected " + std::to_string(spec_.in_channels) + " input channels");
  torch::Tensor in = x;
  if (spec_.padding == Padding::Same) {
    const auto ph = same_padding(x.size(2), spec_.kernel, spec_.stride, spec_.dilation);
    const auto pw = same_padding(x.size(3), spec_.kernel, spec_.stride, spec_.dilation);
    if (ph[0] + ph[1] + pw[0] + pw[1] > 0) in = torch::constant_pad_nd(x, {pw[0], pw[1], ph[0], ph[1]});
  }
  const std::array<int64_t, 2> stride{spec_.stride, spec_.stride};
  const std::array<int64_t, 2> dilation{spec_.dilation, spec_.dilation};
  const std::array<int64_t, 2> no_pad{0, 0};
  torch::Tensor y;
  if (spec_.separable) {
    y = torch::conv2d(in, depthwise, torch::Tensor{}, stride, no_pad, dilation, spec_.in_channels);
    y = torch::conv2d(y, pointwise, bias);
  } else {
    y = torch::conv2d(in, weight, bias, stride, no_pad, dilation);
  }
  if (spec_.dirac) y = y + alpha.view({1, -1, 1, 1}) * x;
  return y;
}

torch::Tensor instance_norm(const torch::Tensor& x, double eps) {
  auto [var, mean] = torch::var_mean(x, {2, 3}, /*unbiased=*/false, /*keepdim=*/true);
  return (x - mean) * torch::rsqrt(var + eps);
}

torch::Tensor bilinear_upsample2x(const torch::Tensor& x) {
  namespace F = torch::nn::functional;
  return F::interpolate(x, F::InterpolateFuncOptions()
                               .size(std::vector<int64_t>{2 * x.size(2), 2 * x.size(3)})
                               .mode(torch::kBilinear)
                               .align_corners(false));
}

namespace {

struct RecoveringClamp : torch::autograd::Function<RecoveringClamp> {
  static torch::Tensor forward(torch::autograd::AutogradContext* ctx, const torch::Tensor& x) {
    ctx->save_for_backward({x});
    return x.clamp(0.0, 1.0);
  }
  static torch::autograd::variable_list backward(torch::autograd::AutogradContext* ctx,
                                                 torch::autograd::variable_list grads) {
    const auto x = ctx->get_saved_variables()[0];
    const auto& g = grads[0];
    const auto pass = ((x >= 0) & (x <= 1)) | ((x < 0) & (g < 0)) | ((x > 1) & (g > 0));
    return {g * pass};
  }
};

}  // namespace

torch::Tensor hardtanh01(const torch::Tensor& x) { return RecoveringClamp::apply(x); }

BilinearDeconvImpl::BilinearDeconvImpl(int64_t in_channels, int64_t out_channels, int64_t kernel) {
  ConvSpec spec;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;
  spec.kernel = kernel;
  spec.dirac = in_channels == out_channels;
  conv = register_module("conv", DiracSepConv(spec));
}

torch::Tensor BilinearDeconvImpl::forward(const torch::Tensor& x) { return conv->forward(bilinear_upsample2x(x)); }

ConvUnitImpl::ConvUnitImpl(const UnitSpec& spec) : spec_(spec) {
  conv = register_module("conv", DiracSepConv(spec.conv));
}

torch::Tensor ConvUnitImpl::forward(const torch::Tensor& x) {
  auto y = conv->forward(spec_.upsample ? bilinear_upsample2x(x) : x);
  if (spec_.norm) y = instance_norm(y);
  switch (spec_.act) {
    case Activation::Selu:
      return torch::selu(y);
    case Activation::HardTanh01:
      return hardtanh01(y);
    case Activation::None:
      break;
  }
  return y;
}

ConvUnit make_strided_pool(int64_t in_channels, int64_t target_channels) {
  UnitSpec u;
  u.conv.in_channels = in_channels;
  u.conv.out_channels = target_channels;
  u.conv.kernel = 3;
  u.conv.stride = 2;
  u.conv.dirac = false;
  return ConvUnit(u);
}

void init_he_selu(torch::nn::Module& m, torch::Generator& gen) {
  torch::NoGradGuard no_grad;
  for (auto& item : m.named_parameters()) {
    const auto& name = item.key();
    auto& p = item.value();
    const auto leaf = name.substr(name.rfind('.') + 1);
    if (leaf == "alpha") {
      p.fill_(1.0);
    } else if (leaf == "bias") {
      p.zero_();
    } else {
      // weights are (out, in_per_group, kh, kw) or (out, in)
      const int64_t fan_in = p.numel() / p.size(0);
      p.normal_(0.0, kSeluGain / std::sqrt(static_cast<double>(fan_in)), gen);
    }
  }
}

}  // namespace unpaired
