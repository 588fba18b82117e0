#include "oreyolo/model_config.hpp"

#include <cmath>

#include "oreyolo/errors.hpp"

namespace oreyolo {

std::string_view to_string(NeckKind kind) { return kind == NeckKind::AFPN ? "afpn" : "pan"; }

std::string_view to_string(SppKind kind) {
  return kind == SppKind::SPPFCSPC ? "sppfcspc" : "sppf";
}

AnchorSet AnchorSet::defaults() {
  AnchorSet set;
  set.scales[0] = {{{10, 13}, {16, 30}, {33, 23}}};
  set.scales[1] = {{{30, 61}, {62, 45}, {59, 119}}};
  set.scales[2] = {{{116, 90}, {156, 198}, {373, 326}}};
  return set;
}

void AnchorSet::validate() const {
  for (const auto& scale : scales) {
    for (const auto& anchor : scale) {
      if (!(anchor.width > 0.0) || !(anchor.height > 0.0)) {
        throw InvalidConfigError("anchor dimensions must be positive");
      }
    }
  }
}

int scale_channels(int base, double width_multiple) {
  if (base <= 0) {
    throw InvalidConfigError("scale_channels: base channel count must be positive, got " +
                             std::to_string(base));
  }
  const double scaled = static_cast<double>(base) * width_multiple;
  const int rounded = static_cast<int>(std::ceil(scaled / 8.0 - 1e-9)) * 8;
  return std::max(rounded, 8);
}

int scale_depth(int base_repeats, double depth_multiple) {
  const auto n = static_cast<int>(std::lround(static_cast<double>(base_repeats) * depth_multiple));
  return std::max(n, 1);
}

void ModelConfig::validate() const {
  if (!(depth_multiple > 0.0 && depth_multiple <= 1.0)) {
    throw InvalidConfigError("depth_multiple must lie in (0, 1]");
  }
  if (!(width_multiple > 0.0 && width_multiple <= 1.0)) {
    throw InvalidConfigError("width_multiple must lie in (0, 1]");
  }
  if (num_classes < 1) {
    throw InvalidConfigError("num_classes must be at least 1");
  }
  if (input_size < 32 || input_size % 32 != 0) {
    throw InvalidConfigError("input_shape must be a positive multiple of 32, got " +
                             std::to_string(input_size));
  }
  if (ema_groups < 1) {
    throw InvalidConfigError("ema_groups must be at least 1");
  }
  if (use_ema) {
    // EMA sits in the P5-stage CSP3 block.
    const int channels = scale_channels(1024, width_multiple);
    if (channels % ema_groups != 0) {
      throw InvalidConfigError("EMA channel count " + std::to_string(channels) +
                               " is not divisible by ema_groups=" + std::to_string(ema_groups));
    }
    if (channels / ema_groups < 4) {
      throw InvalidConfigError("EMA sub-group width must be at least 4 channels");
    }
  }
  anchors.validate();
}

void ModelConfig::store(KeyValueFile& kv) const {
  kv.set("depth_multiple", format_real(depth_multiple));
  kv.set("width_multiple", format_real(width_multiple));
  kv.set("num_classes", std::to_string(num_classes));
  kv.set("input_shape", std::to_string(input_size));
  kv.set("use_ema", use_ema ? "true" : "false");
  kv.set("neck", std::string(to_string(neck_kind)));
  kv.set("spp", std::string(to_string(spp_kind)));
  kv.set("ema_groups", std::to_string(ema_groups));
  std::string list;
  for (const auto& scale : anchors.scales) {
    for (const auto& a : scale) {
      if (!list.empty()) {
        list += ',';
      }
      list += format_real(a.width) + "," + format_real(a.height);
    }
  }
  kv.set("anchors", list);
}

bool ModelConfig::apply(const std::string& key, const std::string& value) {
  if (key == "depth_multiple") {
    depth_multiple = parse_real(key, value);
  } else if (key == "width_multiple") {
    width_multiple = parse_real(key, value);
  } else if (key == "num_classes") {
    num_classes = static_cast<int>(parse_integer(key, value));
  } else if (key == "input_shape") {
    // Accept "640" or "640x640".
    std::string side = value;
    if (const auto x = value.find('x'); x != std::string::npos) {
      side = value.substr(0, x);
      if (value.substr(x + 1) != side) {
        throw ConfigError("config key 'input_shape': only square inputs are supported");
      }
    }
    input_size = static_cast<int>(parse_integer(key, side));
  } else if (key == "use_ema") {
    use_ema = parse_flag(key, value);
  } else if (key == "neck") {
    if (value == "afpn") {
      neck_kind = NeckKind::AFPN;
    } else if (value == "pan") {
      neck_kind = NeckKind::PAN;
    } else {
      throw ConfigError("config key 'neck': expected afpn or pan, got '" + value + "'");
    }
  } else if (key == "spp") {
    if (value == "sppfcspc") {
      spp_kind = SppKind::SPPFCSPC;
    } else if (value == "sppf") {
      spp_kind = SppKind::SPPF;
    } else {
      throw ConfigError("config key 'spp': expected sppfcspc or sppf, got '" + value + "'");
    }
  } else if (key == "ema_groups") {
    ema_groups = static_cast<int>(parse_integer(key, value));
  } else if (key == "anchors") {
    const auto values = parse_real_list(key, value);
    if (values.size() != 2 * AnchorSet::kScales * AnchorSet::kPerScale) {
      throw ConfigError("config key 'anchors': expected 18 comma-separated values");
    }
    std::size_t i = 0;
    for (auto& scale : anchors.scales) {
      for (auto& a : scale) {
        a.width = values[i++];
        a.height = values[i++];
      }
    }
  } else {
    return false;
  }
  return true;
}

ModelConfig ModelConfig::base() {
  ModelConfig cfg;
  cfg.use_ema = false;
  cfg.neck_kind = NeckKind::PAN;
  cfg.spp_kind = SppKind::SPPF;
  return cfg;
}

ModelConfig ModelConfig::full() { return ModelConfig{}; }

bool ModelConfig::operator==(const ModelConfig& o) const {
  for (int s = 0; s < AnchorSet::kScales; ++s) {
    for (int a = 0; a < AnchorSet::kPerScale; ++a) {
      if (anchors.scales[s][a].width != o.anchors.scales[s][a].width ||
          anchors.scales[s][a].height != o.anchors.scales[s][a].height) {
        return false;
      }
    }
  }
  return depth_multiple == o.depth_multiple && width_multiple == o.width_multiple &&
         num_classes == o.num_classes && input_size == o.input_size && use_ema == o.use_ema &&
         neck_kind == o.neck_kind && spp_kind == o.spp_kind && ema_groups == o.ema_groups;
}

}  // namespace oreyolo
