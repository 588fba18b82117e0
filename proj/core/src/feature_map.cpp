#include "oreyolo/feature_map.hpp"

#include <sstream>

#include "oreyolo/errors.hpp"

namespace oreyolo {

FeatureShape FeatureShape::of(const FeatureMap& x) {
  require_feature_map(x, "FeatureShape::of");
  return {x.size(0), x.size(1), x.size(2), x.size(3)};
}

std::ostream& operator<<(std::ostream& os, const FeatureShape& s) {
  return os << '(' << s.batch << ',' << s.channels << ',' << s.height << ',' << s.width << ')';
}

void require_feature_map(const FeatureMap& x, std::string_view where) {
  if (!x.defined() || x.dim() != 4) {
    throw ShapeError(std::string(where) + ": expected a rank-4 feature map");
  }
  for (int d = 0; d < 4; ++d) {
    if (x.size(d) < 1) {
      throw ShapeError(std::string(where) + ": feature map has an empty dimension");
    }
  }
}

void require_channels(const FeatureMap& x, std::int64_t channels, std::string_view where) {
  require_feature_map(x, where);
  if (x.size(1) != channels) {
    std::ostringstream msg;
    msg << where << ": expected " << channels << " input channels, got " << x.size(1);
    throw ShapeError(msg.str());
  }
}

}  // namespace oreyolo
