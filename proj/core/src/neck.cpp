#include "oreyolo/neck.hpp"

#include <bit>
#include <cmath>

#include "oreyolo/errors.hpp"

namespace oreyolo {

namespace {

FeatureMap upsample_nearest(const FeatureMap& x, int factor) {
  return torch::upsample_nearest2d(x, {x.size(2) * factor, x.size(3) * factor});
}

int signed_octaves(std::int64_t from, std::int64_t to) {
  if (from == to) {
    return 0;
  }
  const bool up = to > from;
  const auto big = up ? to : from;
  const auto small = up ? from : to;
  if (small < 1 || big % small != 0 || !std::has_single_bit(static_cast<std::uint64_t>(big / small))) {
    throw InvalidConfigError("pyramid levels must differ by a power of 2 (got " +
                             std::to_string(from) + " -> " + std::to_string(to) + ")");
  }
  const int oct = std::countr_zero(static_cast<std::uint64_t>(big / small));
  return up ? oct : -oct;
}

}  // namespace

AsffWeights asff_weights(const std::vector<torch::Tensor>& lambda_maps) {
  if (lambda_maps.size() < 2) {
    throw ShapeError("asff_weights: need at least two lambda maps");
  }
  for (const auto& m : lambda_maps) {
    require_feature_map(m, "asff_weights");
    if (m.sizes() != lambda_maps.front().sizes() || m.size(1) != 1) {
      throw ShapeError("asff_weights: lambda maps must be (N,1,H,W) with equal dims");
    }
  }
  auto soft = torch::softmax(torch::cat(lambda_maps, 1), 1);
  AsffWeights out;
  for (std::int64_t i = 0; i < soft.size(1); ++i) {
    out.maps.push_back(soft.narrow(1, i, 1));
  }
  return out;
}

FeatureMap asff_fuse(const std::vector<FeatureMap>& resampled, const AsffWeights& weights) {
  if (resampled.empty() || resampled.size() != weights.maps.size()) {
    throw ShapeError("asff_fuse: need one weight map per input");
  }
  const auto& ref = resampled.front();
  require_feature_map(ref, "asff_fuse");
  FeatureMap fused;
  for (std::size_t i = 0; i < resampled.size(); ++i) {
    const auto& x = resampled[i];
    const auto& w = weights.maps[i];
    if (x.sizes() != ref.sizes()) {
      throw ShapeError("asff_fuse: inputs must share one shape");
    }
    if (w.dim() != 4 || w.size(0) != x.size(0) || w.size(1) != 1 || w.size(2) != x.size(2) ||
        w.size(3) != x.size(3)) {
      throw ShapeError("asff_fuse: weight map dims do not match inputs");
    }
    auto term = x * w;
    fused = fused.defined() ? fused + term : term;
  }
  return fused;
}

int octave_offset(std::int64_t from_h, std::int64_t from_w, std::int64_t to_h, std::int64_t to_w) {
  const int oh = signed_octaves(from_h, to_h);
  const int ow = signed_octaves(from_w, to_w);
  if (oh != ow) {
    throw InvalidConfigError("pyramid levels must scale equally along height and width");
  }
  return oh;
}

ResampleImpl::ResampleImpl(int in_channels, int out_channels, int octaves) : octaves_(octaves) {
  body_ = torch::nn::Sequential();
  if (octaves >= 0) {
    body_->push_back(ConvBnAct(in_channels, out_channels, 1));
  } else {
    for (int i = 0; i < -octaves; ++i) {
      const bool last = i == -octaves - 1;
      body_->push_back(ConvBnAct(in_channels, last ? out_channels : in_channels, 2, 2));
    }
  }
  register_module("body", body_);
}

FeatureMap ResampleImpl::forward(const FeatureMap& x) {
  if (octaves_ > 0) {
    return body_->forward(upsample_nearest(x, 1 << octaves_));
  }
  return body_->forward(x);
}

FeatureMap resample_to_level(const FeatureMap& x, const FeatureMap& target) {
  require_feature_map(x, "resample_to_level");
  require_feature_map(target, "resample_to_level");
  const int oct = octave_offset(x.size(2), x.size(3), target.size(2), target.size(3));
  Resample block(static_cast<int>(x.size(1)), static_cast<int>(target.size(1)), oct);
  block->to(x.scalar_type());
  return block->forward(x);
}

AsffFusionImpl::AsffFusionImpl(int channels, int inputs) : channels_(channels) {
  for (int i = 0; i < inputs; ++i) {
    lambda_convs_.push_back(register_module(
        "lambda" + std::to_string(i), torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, 1, 1))));
  }
}

AsffWeights AsffFusionImpl::weights(const std::vector<FeatureMap>& resampled) {
  if (resampled.size() != lambda_convs_.size()) {
    throw ShapeError("AsffFusion: expected " + std::to_string(lambda_convs_.size()) + " inputs");
  }
  std::vector<torch::Tensor> lambdas;
  lambdas.reserve(resampled.size());
  for (std::size_t i = 0; i < resampled.size(); ++i) {
    require_channels(resampled[i], channels_, "AsffFusion");
    auto lam = lambda_convs_[i]->forward(resampled[i]);
    record_conv_macs(lambda_convs_[i], lam);
    lambdas.push_back(lam);
  }
  return asff_weights(lambdas);
}

FeatureMap AsffFusionImpl::forward(const std::vector<FeatureMap>& resampled) {
  return asff_fuse(resampled, weights(resampled));
}

AfpnImpl::AfpnImpl(std::array<int, 3> channels, int repeats) : channels_(channels) {
  const auto [c3, c4, c5] = channels;
  auto refine = [&](const char* name, int c) {
    return register_module(name, Csp3(BlockSpec{BlockKind::CSP3, c, c, 1, 1, repeats}));
  };
  s1_4to3_ = register_module("s1_4to3", Resample(c4, c3, 1));
  s1_3to4_ = register_module("s1_3to4", Resample(c3, c4, -1));
  s1_fuse3_ = register_module("s1_fuse3", AsffFusion(c3, 2));
  s1_fuse4_ = register_module("s1_fuse4", AsffFusion(c4, 2));
  s1_refine3_ = refine("s1_refine3", c3);
  s1_refine4_ = refine("s1_refine4", c4);

  s2_4to3_ = register_module("s2_4to3", Resample(c4, c3, 1));
  s2_5to3_ = register_module("s2_5to3", Resample(c5, c3, 2));
  s2_3to4_ = register_module("s2_3to4", Resample(c3, c4, -1));
  s2_5to4_ = register_module("s2_5to4", Resample(c5, c4, 1));
  s2_3to5_ = register_module("s2_3to5", Resample(c3, c5, -2));
  s2_4to5_ = register_module("s2_4to5", Resample(c4, c5, -1));
  s2_fuse3_ = register_module("s2_fuse3", AsffFusion(c3, 3));
  s2_fuse4_ = register_module("s2_fuse4", AsffFusion(c4, 3));
  s2_fuse5_ = register_module("s2_fuse5", AsffFusion(c5, 3));
  s2_refine3_ = refine("s2_refine3", c3);
  s2_refine4_ = refine("s2_refine4", c4);
  s2_refine5_ = refine("s2_refine5", c5);
}

Pyramid AfpnImpl::forward(const Pyramid& in) { return forward_traced(in).out; }

AfpnImpl::Trace AfpnImpl::forward_traced(const Pyramid& in) {
  require_channels(in.p3, channels_[0], "afpn P3");
  require_channels(in.p4, channels_[1], "afpn P4");
  require_channels(in.p5, channels_[2], "afpn P5");
  if (octave_offset(in.p3.size(2), in.p3.size(3), in.p4.size(2), in.p4.size(3)) != -1 ||
      octave_offset(in.p4.size(2), in.p4.size(3), in.p5.size(2), in.p5.size(3)) != -1) {
    throw InvalidConfigError("afpn: pyramid levels must stand in exact 2x ratios");
  }
  Trace t;

  std::vector<FeatureMap> s1_at3{in.p3, s1_4to3_->forward(in.p4)};
  std::vector<FeatureMap> s1_at4{s1_3to4_->forward(in.p3), in.p4};
  t.stage1[0] = s1_fuse3_->weights(s1_at3);
  t.stage1[1] = s1_fuse4_->weights(s1_at4);
  auto a3 = s1_refine3_->forward(asff_fuse(s1_at3, t.stage1[0]));
  auto a4 = s1_refine4_->forward(asff_fuse(s1_at4, t.stage1[1]));

  std::vector<FeatureMap> at3{a3, s2_4to3_->forward(a4), s2_5to3_->forward(in.p5)};
  std::vector<FeatureMap> at4{s2_3to4_->forward(a3), a4, s2_5to4_->forward(in.p5)};
  std::vector<FeatureMap> at5{s2_3to5_->forward(a3), s2_4to5_->forward(a4), in.p5};
  t.stage2[0] = s2_fuse3_->weights(at3);
  t.stage2[1] = s2_fuse4_->weights(at4);
  t.stage2[2] = s2_fuse5_->weights(at5);

  t.out.p3 = s2_refine3_->forward(asff_fuse(at3, t.stage2[0]));
  t.out.p4 = s2_refine4_->forward(asff_fuse(at4, t.stage2[1]));
  t.out.p5 = s2_refine5_->forward(asff_fuse(at5, t.stage2[2]));
  return t;
}

PanNeckImpl::PanNeckImpl(std::array<int, 3> channels, int repeats) {
  const auto [c3, c4, c5] = channels;
  auto csp = [&](int in, int out) {
    return Csp3(BlockSpec{BlockKind::CSP3, in, out, 1, 1, repeats}, /*shortcut=*/false);
  };
  lateral5_ = register_module("lateral5", ConvBnAct(c5, c4, 1));
  topdown4_ = register_module("topdown4", csp(2 * c4, c4));
  lateral4_ = register_module("lateral4", ConvBnAct(c4, c3, 1));
  out3_ = register_module("out3", csp(2 * c3, c3));
  down3_ = register_module("down3", ConvBnAct(c3, c3, 3, 2));
  out4_ = register_module("out4", csp(2 * c3, c4));
  down4_ = register_module("down4", ConvBnAct(c4, c4, 3, 2));
  out5_ = register_module("out5", csp(2 * c4, c5));
}

Pyramid PanNeckImpl::forward(const Pyramid& in) {
  auto l5 = lateral5_->forward(in.p5);
  auto t4 = topdown4_->forward(torch::cat({upsample_nearest(l5, 2), in.p4}, 1));
  auto l4 = lateral4_->forward(t4);
  Pyramid out;
  out.p3 = out3_->forward(torch::cat({upsample_nearest(l4, 2), in.p3}, 1));
  out.p4 = out4_->forward(torch::cat({down3_->forward(out.p3), l4}, 1));
  out.p5 = out5_->forward(torch::cat({down4_->forward(out.p4), l5}, 1));
  return out;
}

}  // namespace oreyolo
