#include "oreyolo/blocks.hpp"

#include "oreyolo/errors.hpp"
#include "oreyolo/flops.hpp"

namespace oreyolo {

void BlockSpec::validate() const {
  if (in_channels < 1 || out_channels < 1 || kernel < 1) {
    throw InvalidConfigError("BlockSpec: channels and kernel must be positive");
  }
  if (repeats < 1) {
    throw InvalidConfigError("BlockSpec: repeats must be >= 1");
  }
  if (stride != 1 && stride != 2) {
    throw InvalidConfigError("BlockSpec: stride must be 1 or 2");
  }
}

void record_conv_macs(const torch::nn::Conv2d& conv, const torch::Tensor& out) {
  const auto& opts = conv->options;
  const auto groups = opts.groups();
  const auto k = opts.kernel_size();
  const std::int64_t per_output = (opts.in_channels() / groups) * (*k)[0] * (*k)[1];
  FlopCounter::add(out.numel() * per_output);
}

ConvBnActImpl::ConvBnActImpl(const BlockSpec& spec) : spec_(spec) {
  spec_.validate();
  if (spec_.kind != BlockKind::CBS && spec_.kind != BlockKind::CBM) {
    throw InvalidConfigError("ConvBnAct: kind must be CBS or CBM");
  }
  conv_ = register_module(
      "conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(spec_.in_channels, spec_.out_channels,
                                                         spec_.kernel)
                                    .stride(spec_.stride)
                                    .padding((spec_.kernel - 1) / 2)
                                    .bias(false)));
  bn_ = register_module(
      "bn",
      torch::nn::BatchNorm2d(
          torch::nn::BatchNormOptions(spec_.out_channels).eps(1e-3).momentum(0.03)));
}

ConvBnActImpl::ConvBnActImpl(int in_channels, int out_channels, int kernel, int stride,
                             BlockKind kind)
    : ConvBnActImpl(BlockSpec{kind, in_channels, out_channels, kernel, stride, 1}) {}

FeatureMap ConvBnActImpl::forward(const FeatureMap& x) {
  require_channels(x, spec_.in_channels, "conv_block");
  auto y = conv_->forward(x);
  record_conv_macs(conv_, y);
  y = bn_->forward(y);
  return spec_.kind == BlockKind::CBM ? torch::mish(y) : torch::silu(y);
}

BottleneckImpl::BottleneckImpl(int channels, bool shortcut) : shortcut_(shortcut) {
  reduce_ = register_module("reduce", ConvBnAct(channels, channels, 1));
  expand_ = register_module("expand", ConvBnAct(channels, channels, 3));
}

FeatureMap BottleneckImpl::forward(const FeatureMap& x) {
  auto y = expand_->forward(reduce_->forward(x));
  return shortcut_ ? x + y : y;
}

Csp3Impl::Csp3Impl(const BlockSpec& spec, bool shortcut, int ema_groups) : spec_(spec) {
  spec_.validate();
  if (spec_.stride != 1) {
    throw InvalidConfigError("CSP3 blocks are stride 1");
  }
  const int hidden = spec_.out_channels / 2;
  if (hidden < 1) {
    throw InvalidConfigError("CSP3 needs at least 2 output channels");
  }
  main_in_ = register_module("main_in", ConvBnAct(spec_.in_channels, hidden, 1));
  direct_ = register_module("direct", ConvBnAct(spec_.in_channels, hidden, 1));
  bottlenecks_ = torch::nn::Sequential();
  for (int i = 0; i < spec_.repeats; ++i) {
    bottlenecks_->push_back(Bottleneck(hidden, shortcut));
  }
  register_module("bottlenecks", bottlenecks_);
  if (ema_groups > 0) {
    spec_.kind = BlockKind::CSP3_EMA;
    attention_ = register_module("attention", EmaAttention(EmaConfig{2 * hidden, ema_groups}));
  }
  project_ = register_module("project", ConvBnAct(2 * hidden, spec_.out_channels, 1));
}

FeatureMap Csp3Impl::forward(const FeatureMap& x) {
  require_channels(x, spec_.in_channels, "csp3_block");
  auto main = bottlenecks_->forward(main_in_->forward(x));
  auto merged = torch::cat({main, direct_->forward(x)}, 1);
  if (!attention_.is_empty()) {
    merged = attention_->forward(merged);
  }
  return project_->forward(merged);
}

FeatureMap conv_block(const FeatureMap& x, const BlockSpec& spec) {
  ConvBnAct block(spec);
  block->to(x.scalar_type());
  return block->forward(x);
}

FeatureMap csp3_block(const FeatureMap& x, const BlockSpec& spec, bool use_ema, int ema_groups) {
  Csp3 block(spec, true, use_ema ? ema_groups : 0);
  block->to(x.scalar_type());
  return block->forward(x);
}

std::int64_t count_parameters(const torch::nn::Module& module) {
  std::int64_t total = 0;
  for (const auto& p : module.parameters()) {
    if (p.requires_grad()) {
      total += p.numel();
    }
  }
  return total;
}

}  // namespace oreyolo
