#pragma once

#include <torch/torch.h>

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

#include "unpaired/nn/arch_config.hpp"

namespace unpaired {

enum class NetRole { Encoder, Decoder, Critic, Classifier, Alignment };

std::string_view to_string(NetRole r);
NetRole role_from_string(std::string_view s);

/// Common base of every trainable network: a role, its architecture and a freeze flag.
///
/// Freezing turns off requires_grad on the network's own parameters. Activations still
/// carry gradients through it, so networks composed upstream keep receiving gradients.
class NetBase : public torch::nn::Module {
 public:
  NetBase(std::string kind, NetRole role, ArchConfig arch)
      : kind_(std::move(kind)), role_(role), arch_(arch) {}

  const std::string& kind() const { return kind_; }
  NetRole role() const { return role_; }
  const ArchConfig& arch() const { return arch_; }
  bool frozen() const { return frozen_; }
  void set_frozen(bool frozen);

 private:
  std::string kind_;
  NetRole role_;
  ArchConfig arch_;
  bool frozen_ = false;
};

/// Idempotent; returns the same network for chaining.
NetBase& set_frozen(NetBase& net, bool frozen);

/// Freezes a set of networks for a scope and restores their previous flags on exit.
class FreezeGuard {
 public:
  FreezeGuard(std::initializer_list<NetBase*> nets);
  explicit FreezeGuard(const std::vector<NetBase*>& nets);
  ~FreezeGuard();
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<std::pair<NetBase*, bool>> saved_;
};

int64_t parameter_count(const torch::nn::Module& net);

/// Hash over every named parameter's name and bytes, in registration order.
uint64_t parameter_hash(const torch::nn::Module& net);

/// Drops accumulated gradients on every parameter.
void clear_grads(torch::nn::Module& net);

}  // namespace unpaired
