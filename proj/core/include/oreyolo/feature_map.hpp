#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <ostream>
#include <string_view>

namespace oreyolo {

/// Rank-4 activation tensor: batch x channels x height x width.
using FeatureMap = torch::Tensor;

struct FeatureShape {
  std::int64_t batch = 0;
  std::int64_t channels = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;

  static FeatureShape of(const FeatureMap& x);
  bool operator==(const FeatureShape&) const = default;
};

std::ostream& operator<<(std::ostream& os, const FeatureShape& s);

/// Throws ShapeError unless `x` is rank 4 with every dimension >= 1.
void require_feature_map(const FeatureMap& x, std::string_view where);

/// Throws ShapeError unless `x` has `channels` channels.
void require_channels(const FeatureMap& x, std::int64_t channels, std::string_view where);

}  // namespace oreyolo

namespace oreyolo {

/// Three pyramid levels at strides 8, 16, 32.
struct Pyramid {
  FeatureMap p3;
  FeatureMap p4;
  FeatureMap p5;
};

}  // namespace oreyolo
