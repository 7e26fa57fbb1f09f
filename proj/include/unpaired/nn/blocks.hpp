#pragma once

#include <torch/torch.h>

namespace unpaired {

enum class Padding { Same, Valid };

/// Shape and flavour of one convolution.
/// Separable parameter count is (O + k*k) * C; a regular one is O * k*k * C.
struct ConvSpec {
  int64_t in_channels = 1;
  int64_t out_channels = 1;
  int64_t kernel = 3;
  int64_t stride = 1;
  int64_t dilation = 1;
  bool separable = true;
  bool dirac = true;
  bool bias = false;
  Padding padding = Padding::Same;
};

/// Depthwise-separable convolution plus a learnable per-channel scale on the identity path:
///   y = pointwise(depthwise(x)) + alpha * x.
/// The identity path needs in == out, stride 1 and same padding (ConfigError otherwise).
class DiracSepConvImpl : public torch::nn::Module {
 public:
  explicit DiracSepConvImpl(const ConvSpec& spec);

  torch::Tensor forward(const torch::Tensor& x);

  const ConvSpec& spec() const { return spec_; }
  /// Weights excluding alpha and bias.
  int64_t weight_count() const;

  torch::Tensor depthwise, pointwise, weight, alpha, bias;

 private:
  ConvSpec spec_;
};
TORCH_MODULE(DiracSepConv);

/// TF-style "same" padding: output is ceil(n / stride), extra pixel goes right/bottom.
std::array<int64_t, 2> same_padding(int64_t size, int64_t kernel, int64_t stride, int64_t dilation);

/// Per-sample, per-channel standardization without affine parameters.
torch::Tensor instance_norm(const torch::Tensor& x, double eps = 1e-5);

/// Clamp to [0,1]. Outside the range the gradient passes only when descent would move the
/// input back toward [0,1], so a unit stuck past a bound can still recover.
torch::Tensor hardtanh01(const torch::Tensor& x);

torch::Tensor bilinear_upsample2x(const torch::Tensor& x);

/// Bilinear x2 upsample followed by a Dirac separable convolution (kernel 4 by default).
class BilinearDeconvImpl : public torch::nn::Module {
 public:
  BilinearDeconvImpl(int64_t in_channels, int64_t out_channels, int64_t kernel = 4);
  torch::Tensor forward(const torch::Tensor& x);
  DiracSepConv conv{nullptr};
};
TORCH_MODULE(BilinearDeconv);

enum class Activation { Selu, HardTanh01, None };

/// Convolution (optionally preceded by a bilinear x2 upsample), then InstanceNorm and activation.
struct UnitSpec {
  ConvSpec conv;
  bool upsample = false;
  bool norm = true;
  Activation act = Activation::Selu;
};

class ConvUnitImpl : public torch::nn::Module {
 public:
  explicit ConvUnitImpl(const UnitSpec& spec);
  torch::Tensor forward(const torch::Tensor& x);
  DiracSepConv conv{nullptr};

 private:
  UnitSpec spec_;
};
TORCH_MODULE(ConvUnit);

/// Stride-2 separable convolution used in place of pooling.
ConvUnit make_strided_pool(int64_t in_channels, int64_t target_channels);

/// In-place He initialization with the SELU gain; alpha = 1, biases = 0.
void init_he_selu(torch::nn::Module& m, torch::Generator& gen);

}  // namespace unpaired
