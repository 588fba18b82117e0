#pragma once

#include <torch/torch.h>

#include <array>
#include <vector>

#include "oreyolo/blocks.hpp"
#include "oreyolo/model_config.hpp"
#include "oreyolo/neck.hpp"
#include "oreyolo/sppfcspc.hpp"

namespace oreyolo {

/// Output widths of the three pyramid levels: scale_channels(256/512/1024).
std::array<int, 3> level_channels(const ModelConfig& cfg);

/// Ordered block list of the backbone: CBM stem (k6 s2), then four
/// down-stages of CBS (k3 s2) + CSP3 with base widths 128/256/512/1024 and
/// base repeats 3/6/9/3. The last stage's CSP3 carries EMA when enabled.
/// Blocks 4, 6 and 8 (0-based) produce P3, P4 and P5.
std::vector<BlockSpec> build_backbone(const ModelConfig& cfg);

class BackboneImpl : public torch::nn::Module {
 public:
  explicit BackboneImpl(const ModelConfig& cfg);
  /// images (N, 3, S, S) -> P3, P4, P5 at strides 8, 16, 32.
  Pyramid forward(const torch::Tensor& images);

 private:
  std::vector<torch::nn::AnyModule> blocks_;
};
TORCH_MODULE(Backbone);

/// One 1x1 conv per level producing anchors * (5 + classes) channels.
class DetectHeadImpl : public torch::nn::Module {
 public:
  DetectHeadImpl(std::array<int, 3> channels, int num_classes, int input_size);
  std::vector<torch::Tensor> forward(const Pyramid& features);

  int outputs_per_anchor() const { return 5 + num_classes_; }

 private:
  int num_classes_;
  std::vector<torch::nn::Conv2d> convs_;
};
TORCH_MODULE(DetectHead);

/// Backbone -> SPP block on P5 -> neck -> detection head.
class OreYoloImpl : public torch::nn::Module {
 public:
  explicit OreYoloImpl(const ModelConfig& cfg);

  /// Raw head outputs, one (N, 3*(5+classes), H, W) map per stride 8/16/32.
  std::vector<torch::Tensor> forward(const torch::Tensor& images);

  const ModelConfig& config() const { return cfg_; }

 private:
  ModelConfig cfg_;
  Backbone backbone_{nullptr};
  torch::nn::AnyModule spp_;
  Afpn afpn_{nullptr};
  PanNeck pan_{nullptr};
  DetectHead head_{nullptr};
};
TORCH_MODULE(OreYolo);

}  // namespace oreyolo
