#include "unpaired/nn/network.hpp"

#include "unpaired/data/array_io.hpp"
#include "unpaired/errors.hpp"

namespace unpaired {

std::string_view to_string(NetRole r) {
  switch (r) {
    case NetRole::Encoder:
      return "encoder";
    case NetRole::Decoder:
      return "decoder";
    case NetRole::Critic:
      return "critic";
    case NetRole::Classifier:
      return "classifier";
    case NetRole::Alignment:
      return "alignment";
  }
  return "?";
}

NetRole role_from_string(std::string_view s) {
  for (auto r : {NetRole::Encoder, NetRole::Decoder, NetRole::Critic, NetRole::Classifier, NetRole::Alignment})
    if (to_string(r) == s) return r;
  throw FormatError("unknown network role '" + std::string(s) + "'");
}

void NetBase::set_frozen(bool frozen) {
  frozen_ = frozen;
  for (auto& p : parameters()) p.requires_grad_(!frozen);
}

NetBase& set_frozen(NetBase& net, bool frozen) {
  net.set_frozen(frozen);
  return net;
}

FreezeGuard::FreezeGuard(std::initializer_list<NetBase*> nets) : FreezeGuard(std::vector<NetBase*>(nets)) {}

FreezeGuard::FreezeGuard(const std::vector<NetBase*>& nets) {
  for (auto* n : nets) {
    if (n == nullptr) continue;
    saved_.emplace_back(n, n->frozen());
    n->set_frozen(true);
  }
}

FreezeGuard::~FreezeGuard() {
  for (auto it = saved_.rbegin(); it != saved_.rend(); ++it) it->first->set_frozen(it->second);
}

int64_t parameter_count(const torch::nn::Module& net) {
  int64_t n = 0;
  for (const auto& p : net.parameters()) n += p.numel();
  return n;
}

uint64_t parameter_hash(const torch::nn::Module& net) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& item : net.named_parameters()) {
    for (char c : item.key()) {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
    h = tensor_hash(item.value().detach(), h);
  }
  return h;
}

void clear_grads(torch::nn::Module& net) {
  for (auto& p : net.parameters()) p.mutable_grad().reset();
}

}  // namespace unpaired
