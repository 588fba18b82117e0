#include "oreyolo/sppfcspc.hpp"

#include "oreyolo/errors.hpp"

namespace oreyolo {

void SppSpec::validate() const {
  if (pool_kernel < 3 || pool_kernel % 2 == 0) {
    throw InvalidConfigError("SPP pool kernel must be odd and >= 3");
  }
  if (channels < 2) {
    throw InvalidConfigError("SPP block needs at least 2 channels");
  }
}

FeatureMap max_pool_same(const FeatureMap& x, int kernel) {
  return torch::max_pool2d(x, {kernel, kernel}, {1, 1}, {kernel / 2, kernel / 2});
}

FeatureMap sppf_chain(const FeatureMap& x, int kernel) {
  require_feature_map(x, "sppf_chain");
  if (kernel % 2 == 0) {
    throw InvalidConfigError("sppf_chain: kernel must be odd");
  }
  auto p1 = max_pool_same(x, kernel);
  auto p2 = max_pool_same(p1, kernel);
  auto p3 = max_pool_same(p2, kernel);
  return torch::cat({x, p1, p2, p3}, 1);
}

SppfImpl::SppfImpl(int in_channels, int out_channels, int kernel) : kernel_(kernel) {
  SppSpec{SppKind::SPPF, kernel, in_channels}.validate();
  const int hidden = in_channels / 2;
  reduce_ = register_module("reduce", ConvBnAct(in_channels, hidden, 1));
  project_ = register_module("project", ConvBnAct(4 * hidden, out_channels, 1));
}

FeatureMap SppfImpl::forward(const FeatureMap& x) {
  return project_->forward(sppf_chain(reduce_->forward(x), kernel_));
}

SppfcspcImpl::SppfcspcImpl(const SppSpec& spec) : spec_(spec) {
  spec_.validate();
  const int c = spec_.channels;
  enter_ = register_module("enter", ConvBnAct(c, c, 1));
  spatial_in_ = register_module("spatial_in", ConvBnAct(c, c, 3));
  mix_in_ = register_module("mix_in", ConvBnAct(c, c, 1));
  fuse_pools_ = register_module("fuse_pools", ConvBnAct(4 * c, c, 1));
  spatial_out_ = register_module("spatial_out", ConvBnAct(c, c, 3));
  shortcut_ = register_module("shortcut", ConvBnAct(c, c, 1));
  project_ = register_module("project", ConvBnAct(2 * c, c, 1));
}

FeatureMap SppfcspcImpl::forward(const FeatureMap& x) {
  require_channels(x, spec_.channels, "sppfcspc");
  auto a = mix_in_->forward(spatial_in_->forward(enter_->forward(x)));
  a = spatial_out_->forward(fuse_pools_->forward(sppf_chain(a, spec_.pool_kernel)));
  auto b = shortcut_->forward(x);
  return project_->forward(torch::cat({a, b}, 1));
}

torch::nn::AnyModule make_spp_block(const SppSpec& spec) {
  if (spec.kind == SppKind::SPPFCSPC) {
    return torch::nn::AnyModule(Sppfcspc(spec));
  }
  return torch::nn::AnyModule(Sppf(spec.channels, spec.channels, spec.pool_kernel));
}

FeatureMap sppfcspc_forward(const FeatureMap& x, const SppSpec& spec) {
  auto block = make_spp_block(spec);
  block.ptr()->to(x.scalar_type());
  return block.forward(x);
}

}  // namespace oreyolo
