#pragma once

#include <torch/torch.h>

#include "oreyolo/feature_map.hpp"

namespace oreyolo {

/// Channel grouping for the multi-scale attention block.
struct EmaConfig {
  int channels = 0;
  int groups = 4;

  int group_channels() const { return channels / groups; }
  /// C % G == 0, G >= 1, C / G >= 4.
  void validate() const;
};

/// Mean over all spatial positions: (N, C, H, W) -> (N, C).
torch::Tensor global_avg_pool2d(const FeatureMap& x);

struct DirectionalProfiles {
  torch::Tensor along_height;  // (N, C, H, 1): mean over width for each row
  torch::Tensor along_width;   // (N, C, 1, W): mean over height for each column
};

/// Row and column mean profiles ("X/Y average pool").
DirectionalProfiles directional_pool(const FeatureMap& x);

/// Intermediate values of one attention pass, for inspection and tests.
struct EmaTrace {
  torch::Tensor output;
  torch::Tensor descriptor_1x1;  // (N*G, 1, C/G) softmax of pooled 1x1-branch features
  torch::Tensor descriptor_3x3;  // (N*G, 1, C/G) softmax of pooled 3x3-branch features
  torch::Tensor gate;            // (N*G, 1, H, W) sigmoid spatial attention
};

/// Efficient multi-scale attention. Each of the G channel groups gets
///  - a 1x1 branch: row/column profiles share one 1x1 conv, their sigmoids
///    gate the group, then group normalisation;
///  - a 3x3 branch: plain 3x3 conv over the group;
///  - cross-spatial learning: each branch's softmaxed global descriptor
///    (1 x C/G) multiplies the other branch's flattened features
///    (C/G x HW); the two maps are summed, passed through a sigmoid and
///    multiplied onto the group.
/// Output shape equals input shape.
class EmaAttentionImpl : public torch::nn::Module {
 public:
  explicit EmaAttentionImpl(EmaConfig cfg);

  FeatureMap forward(const FeatureMap& x);
  EmaTrace forward_traced(const FeatureMap& x);

  const EmaConfig& config() const { return cfg_; }

 private:
  EmaConfig cfg_;
  torch::nn::Conv2d conv1x1_{nullptr};
  torch::nn::Conv2d conv3x3_{nullptr};
  torch::nn::GroupNorm norm_{nullptr};
};
TORCH_MODULE(EmaAttention);

}  // namespace oreyolo
