#include "oreyolo/model.hpp"

#include <cmath>

#include "oreyolo/errors.hpp"

namespace oreyolo {

std::array<int, 3> level_channels(const ModelConfig& cfg) {
  return {scale_channels(256, cfg.width_multiple), scale_channels(512, cfg.width_multiple),
          scale_channels(1024, cfg.width_multiple)};
}

std::vector<BlockSpec> build_backbone(const ModelConfig& cfg) {
  cfg.validate();
  const auto w = [&](int base) { return scale_channels(base, cfg.width_multiple); };
  const auto d = [&](int base) { return scale_depth(base, cfg.depth_multiple); };
  std::vector<BlockSpec> blocks;
  blocks.push_back({BlockKind::CBM, 3, w(64), 6, 2, 1});
  constexpr std::array<std::pair<int, int>, 4> stages = {{{128, 3}, {256, 6}, {512, 9}, {1024, 3}}};
  int channels = w(64);
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto [width, repeats] = stages[i];
    blocks.push_back({BlockKind::CBS, channels, w(width), 3, 2, 1});
    channels = w(width);
    const bool attention = cfg.use_ema && i + 1 == stages.size();
    blocks.push_back(
        {attention ? BlockKind::CSP3_EMA : BlockKind::CSP3, channels, channels, 1, 1, d(repeats)});
  }
  return blocks;
}

BackboneImpl::BackboneImpl(const ModelConfig& cfg) {
  const auto layout = build_backbone(cfg);
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& spec = layout[i];
    torch::nn::AnyModule block;
    switch (spec.kind) {
      case BlockKind::CBS:
      case BlockKind::CBM:
        block = torch::nn::AnyModule(register_module("b" + std::to_string(i), ConvBnAct(spec)));
        break;
      case BlockKind::CSP3:
        block = torch::nn::AnyModule(register_module("b" + std::to_string(i), Csp3(spec)));
        break;
      case BlockKind::CSP3_EMA:
        block = torch::nn::AnyModule(
            register_module("b" + std::to_string(i), Csp3(spec, true, cfg.ema_groups)));
        break;
    }
    blocks_.push_back(std::move(block));
  }
}

Pyramid BackboneImpl::forward(const torch::Tensor& images) {
  require_channels(images, 3, "backbone");
  Pyramid out;
  torch::Tensor x = images;
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    x = blocks_[i].forward(x);
    if (i == 4) {
      out.p3 = x;
    } else if (i == 6) {
      out.p4 = x;
    }
  }
  out.p5 = x;
  return out;
}

DetectHeadImpl::DetectHeadImpl(std::array<int, 3> channels, int num_classes, int input_size)
    : num_classes_(num_classes) {
  const int outputs = AnchorSet::kPerScale * outputs_per_anchor();
  for (int level = 0; level < 3; ++level) {
    auto conv = register_module("out" + std::to_string(level),
                                torch::nn::Conv2d(torch::nn::Conv2dOptions(channels[level], outputs, 1)));
    // Objectness prior of ~8 objects per image; uniform class prior.
    torch::NoGradGuard no_grad;
    auto bias = conv->bias.view({AnchorSet::kPerScale, outputs_per_anchor()});
    const double cells = std::pow(static_cast<double>(input_size) / kStrides[level], 2);
    bias.select(1, 4).fill_(std::log(8.0 / cells));
    bias.narrow(1, 5, num_classes).fill_(std::log(0.6 / (num_classes - 0.99)));
    convs_.push_back(conv);
  }
}

std::vector<torch::Tensor> DetectHeadImpl::forward(const Pyramid& features) {
  std::vector<torch::Tensor> out;
  const std::array<const torch::Tensor*, 3> levels = {&features.p3, &features.p4, &features.p5};
  for (int i = 0; i < 3; ++i) {
    auto y = convs_[i]->forward(*levels[i]);
    record_conv_macs(convs_[i], y);
    out.push_back(y);
  }
  return out;
}

OreYoloImpl::OreYoloImpl(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto channels = level_channels(cfg_);
  backbone_ = register_module("backbone", Backbone(cfg_));
  spp_ = make_spp_block(SppSpec{cfg_.spp_kind, 5, channels[2]});
  register_module("spp", spp_.ptr());
  const int neck_repeats = scale_depth(3, cfg_.depth_multiple);
  if (cfg_.neck_kind == NeckKind::AFPN) {
    afpn_ = register_module("neck", Afpn(channels, neck_repeats));
  } else {
    pan_ = register_module("neck", PanNeck(channels, neck_repeats));
  }
  head_ = register_module("head", DetectHead(channels, cfg_.num_classes, cfg_.input_size));
}

std::vector<torch::Tensor> OreYoloImpl::forward(const torch::Tensor& images) {
  auto features = backbone_->forward(images);
  features.p5 = spp_.forward(features.p5);
  auto fused = afpn_.is_empty() ? pan_->forward(features) : afpn_->forward(features);
  return head_->forward(fused);
}

}  // namespace oreyolo
