#pragma once

#include <torch/torch.h>

#include <array>
#include <vector>

#include "oreyolo/blocks.hpp"
#include "oreyolo/feature_map.hpp"

namespace oreyolo {

/// Per-position fusion weights, one (N, 1, H, W) map per contributing
/// level. At every position the maps sum to 1 and lie in [0, 1].
struct AsffWeights {
  std::vector<torch::Tensor> maps;
};

/// Position-wise softmax over the level axis of the lambda maps.
AsffWeights asff_weights(const std::vector<torch::Tensor>& lambda_maps);

/// y = sum_i w_i * x_i at every position; all channels at a position share
/// that position's weights.
FeatureMap asff_fuse(const std::vector<FeatureMap>& resampled, const AsffWeights& weights);

/// Signed octave distance from `from` spatial size to `to` (positive means
/// upsampling). Throws InvalidConfigError unless the ratio is a power of 2
/// and identical along both axes.
int octave_offset(std::int64_t from_h, std::int64_t from_w, std::int64_t to_h, std::int64_t to_w);

/// Brings a map to another level: nearest-neighbour upsampling followed by a
/// 1x1 CBS, or one 2x2 stride-2 CBS per octave downwards (channel change on
/// the last). octaves == 0 is a 1x1 channel projection.
class ResampleImpl : public torch::nn::Module {
 public:
  ResampleImpl(int in_channels, int out_channels, int octaves);
  FeatureMap forward(const FeatureMap& x);

 private:
  int octaves_;
  torch::nn::Sequential body_{nullptr};
};
TORCH_MODULE(Resample);

/// Functional form: freshly initialised Resample from x to target's
/// spatial dims and channel count.
FeatureMap resample_to_level(const FeatureMap& x, const FeatureMap& target);

/// Adaptive spatial fusion of `inputs` same-shaped maps. Each input gets its
/// own 1x1 conv (C -> 1) producing its lambda map.
class AsffFusionImpl : public torch::nn::Module {
 public:
  AsffFusionImpl(int channels, int inputs);

  FeatureMap forward(const std::vector<FeatureMap>& resampled);
  AsffWeights weights(const std::vector<FeatureMap>& resampled);

 private:
  int channels_;
  std::vector<torch::nn::Conv2d> lambda_convs_;
};
TORCH_MODULE(AsffFusion);

/// Asymptotic feature pyramid. Stage 1 fuses P3 and P4 at both of their
/// resolutions (two-input ASFF); stage 2 adds P5 and fuses all three levels
/// at every resolution (three-input ASFF). Every fusion is followed by a
/// CSP3 refinement; outputs keep the input widths and spatial dims.
class AfpnImpl : public torch::nn::Module {
 public:
  AfpnImpl(std::array<int, 3> channels, int repeats);

  Pyramid forward(const Pyramid& in);

  struct Trace {
    Pyramid out;
    std::array<AsffWeights, 2> stage1;  // levels 3, 4
    std::array<AsffWeights, 3> stage2;  // levels 3, 4, 5
  };
  Trace forward_traced(const Pyramid& in);

 private:
  std::array<int, 3> channels_;
  // Stage 1.
  Resample s1_4to3_{nullptr}, s1_3to4_{nullptr};
  AsffFusion s1_fuse3_{nullptr}, s1_fuse4_{nullptr};
  Csp3 s1_refine3_{nullptr}, s1_refine4_{nullptr};
  // Stage 2.
  Resample s2_4to3_{nullptr}, s2_5to3_{nullptr};
  Resample s2_3to4_{nullptr}, s2_5to4_{nullptr};
  Resample s2_3to5_{nullptr}, s2_4to5_{nullptr};
  AsffFusion s2_fuse3_{nullptr}, s2_fuse4_{nullptr}, s2_fuse5_{nullptr};
  Csp3 s2_refine3_{nullptr}, s2_refine4_{nullptr}, s2_refine5_{nullptr};
};
TORCH_MODULE(Afpn);

/// Classic top-down FPN followed by bottom-up PAN (ablation baseline).
class PanNeckImpl : public torch::nn::Module {
 public:
  PanNeckImpl(std::array<int, 3> channels, int repeats);

  Pyramid forward(const Pyramid& in);

 private:
  ConvBnAct lateral5_{nullptr}, lateral4_{nullptr};
  Csp3 topdown4_{nullptr}, out3_{nullptr}, out4_{nullptr}, out5_{nullptr};
  ConvBnAct down3_{nullptr}, down4_{nullptr};
};
TORCH_MODULE(PanNeck);

}  // namespace oreyolo
