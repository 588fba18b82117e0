#pragma once

#include <torch/torch.h>

#include "oreyolo/blocks.hpp"
#include "oreyolo/model_config.hpp"

namespace oreyolo {

struct SppSpec {
  SppKind kind = SppKind::SPPFCSPC;
  int pool_kernel = 5;
  int channels = 0;

  /// pool_kernel odd and >= 3, channels >= 2.
  void validate() const;
};

/// Stride-1 max pool with same padding.
FeatureMap max_pool_same(const FeatureMap& x, int kernel);

/// Three chained stride-1 max pools of size `kernel`; returns the channel
/// concatenation [x, p1, p2, p3] (4x channels). Pooling only: the
/// projection back to the block width happens in the owning module.
FeatureMap sppf_chain(const FeatureMap& x, int kernel);

/// Fast spatial pyramid pooling: 1x1 CBS to C/2, sppf_chain, 1x1 CBS to out.
class SppfImpl : public torch::nn::Module {
 public:
  SppfImpl(int in_channels, int out_channels, int kernel = 5);
  FeatureMap forward(const FeatureMap& x);

 private:
  int kernel_;
  ConvBnAct reduce_{nullptr};
  ConvBnAct project_{nullptr};
};
TORCH_MODULE(Sppf);

/// SPPF wrapped in a cross-stage-partial structure. Path A:
/// 1x1 -> 3x3 -> 1x1 -> sppf_chain -> 1x1 -> 3x3. Path B: one 1x1 conv.
/// Both paths are `channels` wide; their concatenation is projected back
/// to `channels` by a final 1x1.
class SppfcspcImpl : public torch::nn::Module {
 public:
  explicit SppfcspcImpl(const SppSpec& spec);
  FeatureMap forward(const FeatureMap& x);

 private:
  SppSpec spec_;
  ConvBnAct enter_{nullptr};
  ConvBnAct spatial_in_{nullptr};
  ConvBnAct mix_in_{nullptr};
  ConvBnAct fuse_pools_{nullptr};
  ConvBnAct spatial_out_{nullptr};
  ConvBnAct shortcut_{nullptr};
  ConvBnAct project_{nullptr};
};
TORCH_MODULE(Sppfcspc);

/// Builds the deepest-level pooling block selected by `spec.kind`.
torch::nn::AnyModule make_spp_block(const SppSpec& spec);

/// Functional form: freshly initialised block of kind spec.kind applied once.
FeatureMap sppfcspc_forward(const FeatureMap& x, const SppSpec& spec);

}  // namespace oreyolo
