#pragma once

#include <torch/torch.h>

#include <optional>

#include "oreyolo/ema.hpp"
#include "oreyolo/feature_map.hpp"

namespace oreyolo {

enum class BlockKind {
  CBS,      // conv + BN + SiLU
  CBM,      // conv + BN + Mish
  CSP3,     // cross-stage-partial block with bottlenecks
  CSP3_EMA  // CSP3 with attention on the concatenated paths
};

struct BlockSpec {
  BlockKind kind = BlockKind::CBS;
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int repeats = 1;

  /// repeats >= 1, stride in {1, 2}, channels and kernel positive.
  void validate() const;
};

/// Adds conv MACs (out.numel() * in/groups * kh * kw) to the active FlopCounter.
void record_conv_macs(const torch::nn::Conv2d& conv, const torch::Tensor& out);

/// Bias-free convolution, batch norm, then SiLU (CBS) or Mish (CBM).
/// Padding is (k - 1) / 2, so stride 2 halves even spatial dims.
class ConvBnActImpl : public torch::nn::Module {
 public:
  explicit ConvBnActImpl(const BlockSpec& spec);
  ConvBnActImpl(int in_channels, int out_channels, int kernel = 1, int stride = 1,
                BlockKind kind = BlockKind::CBS);

  FeatureMap forward(const FeatureMap& x);

  const BlockSpec& spec() const { return spec_; }

 private:
  BlockSpec spec_;
  torch::nn::Conv2d conv_{nullptr};
  torch::nn::BatchNorm2d bn_{nullptr};
};
TORCH_MODULE(ConvBnAct);

/// 1x1 CBS then 3x3 CBS, with an identity shortcut when enabled.
class BottleneckImpl : public torch::nn::Module {
 public:
  BottleneckImpl(int channels, bool shortcut);
  FeatureMap forward(const FeatureMap& x);

 private:
  ConvBnAct reduce_{nullptr};
  ConvBnAct expand_{nullptr};
  bool shortcut_;
};
TORCH_MODULE(Bottleneck);

/// CSP3: a bottleneck path (1x1 CBS then `repeats` bottlenecks) and a direct
/// 1x1 path, each out/2 wide, concatenated and projected by a 1x1 CBS.
/// With attention enabled the concatenation passes through EMA before the
/// projection.
class Csp3Impl : public torch::nn::Module {
 public:
  /// `ema_groups` > 0 turns the block into CSP3_EMA.
  Csp3Impl(const BlockSpec& spec, bool shortcut = true, int ema_groups = 0);

  FeatureMap forward(const FeatureMap& x);

  bool has_attention() const { return !attention_.is_empty(); }

 private:
  BlockSpec spec_;
  ConvBnAct main_in_{nullptr};
  ConvBnAct direct_{nullptr};
  ConvBnAct project_{nullptr};
  torch::nn::Sequential bottlenecks_{nullptr};
  EmaAttention attention_{nullptr};
};
TORCH_MODULE(Csp3);

// Functional forms for one-off use; they build a freshly initialised block
// and run it once.
FeatureMap conv_block(const FeatureMap& x, const BlockSpec& spec);
FeatureMap csp3_block(const FeatureMap& x, const BlockSpec& spec, bool use_ema, int ema_groups = 4);

/// Total element count of trainable parameters.
std::int64_t count_parameters(const torch::nn::Module& module);

}  // namespace oreyolo
