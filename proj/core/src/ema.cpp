#include "oreyolo/ema.hpp"

#include "oreyolo/blocks.hpp"
#include "oreyolo/errors.hpp"
#include "oreyolo/flops.hpp"

namespace oreyolo {

void EmaConfig::validate() const {
  if (groups < 1) {
    throw InvalidConfigError("EMA: groups must be >= 1");
  }
  if (channels % groups != 0) {
    throw InvalidConfigError("EMA: channels (" + std::to_string(channels) +
                             ") not divisible by groups (" + std::to_string(groups) + ")");
  }
  if (channels / groups < 4) {
    throw InvalidConfigError("EMA: sub-group width C/G must be at least 4");
  }
}

torch::Tensor global_avg_pool2d(const FeatureMap& x) {
  require_feature_map(x, "global_avg_pool2d");
  return x.mean({2, 3});
}

DirectionalProfiles directional_pool(const FeatureMap& x) {
  require_feature_map(x, "directional_pool");
  return {x.mean(3, /*keepdim=*/true), x.mean(2, /*keepdim=*/true)};
}

EmaAttentionImpl::EmaAttentionImpl(EmaConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const int cg = cfg_.group_channels();
  conv1x1_ = register_module("conv1x1", torch::nn::Conv2d(torch::nn::Conv2dOptions(cg, cg, 1)));
  conv3x3_ = register_module(
      "conv3x3", torch::nn::Conv2d(torch::nn::Conv2dOptions(cg, cg, 3).padding(1)));
  norm_ = register_module("norm", torch::nn::GroupNorm(torch::nn::GroupNormOptions(cg, cg)));
}

FeatureMap EmaAttentionImpl::forward(const FeatureMap& x) { return forward_traced(x).output; }

EmaTrace EmaAttentionImpl::forward_traced(const FeatureMap& x) {
  require_channels(x, cfg_.channels, "EmaAttention");
  const auto n = x.size(0);
  const auto h = x.size(2);
  const auto w = x.size(3);
  const auto g = cfg_.groups;
  const auto cg = cfg_.group_channels();

  auto grouped = x.reshape({n * g, cg, h, w});

  // 1x1 branch: shared conv over the concatenated row/column profiles.
  auto profiles = directional_pool(grouped);
  auto stacked = torch::cat({profiles.along_height, profiles.along_width.permute({0, 1, 3, 2})}, 2);
  auto mixed = conv1x1_->forward(stacked);
  record_conv_macs(conv1x1_, mixed);
  auto parts = mixed.split_with_sizes({h, w}, 2);
  auto row_gate = parts[0].sigmoid();
  auto col_gate = parts[1].permute({0, 1, 3, 2}).sigmoid();
  auto branch1 = norm_->forward(grouped * row_gate * col_gate);

  // 3x3 branch.
  auto branch3 = conv3x3_->forward(grouped);
  record_conv_macs(conv3x3_, branch3);

  // Cross-spatial learning.
  auto desc1 = torch::softmax(global_avg_pool2d(branch1), -1).unsqueeze(1);  // (NG,1,cg)
  auto desc3 = torch::softmax(global_avg_pool2d(branch3), -1).unsqueeze(1);
  auto flat1 = branch1.reshape({n * g, cg, h * w});
  auto flat3 = branch3.reshape({n * g, cg, h * w});
  auto attention = torch::bmm(desc1, flat3) + torch::bmm(desc3, flat1);  // (NG,1,HW)
  FlopCounter::add(2 * n * g * cg * h * w);
  auto gate = attention.reshape({n * g, 1, h, w}).sigmoid();

  EmaTrace trace;
  trace.output = (grouped * gate).reshape({n, cfg_.channels, h, w});
  trace.descriptor_1x1 = desc1;
  trace.descriptor_3x3 = desc3;
  trace.gate = gate;
  return trace;
}

}  // namespace oreyolo
