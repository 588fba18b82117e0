#pragma once

#include <array>
#include <string>
#include <string_view>

#include "oreyolo/kv_file.hpp"

namespace oreyolo {

enum class NeckKind { AFPN, PAN };
enum class SppKind { SPPFCSPC, SPPF };

std::string_view to_string(NeckKind kind);
std::string_view to_string(SppKind kind);

struct Anchor {
  double width = 0.0;   // input-image pixels
  double height = 0.0;
};

/// Three anchors per output scale, scales ordered stride 8, 16, 32.
struct AnchorSet {
  static constexpr int kScales = 3;
  static constexpr int kPerScale = 3;
  std::array<std::array<Anchor, kPerScale>, kScales> scales{};

  static AnchorSet defaults();
  void validate() const;
};

inline constexpr std::array<int, 3> kStrides = {8, 16, 32};

/// Architecture knobs. Key names in the config file follow the training
/// table: depth_multiple, width_multiple, input_shape, plus the ablation
/// switches.
struct ModelConfig {
  double depth_multiple = 0.20;
  double width_multiple = 0.25;
  int num_classes = 2;
  int input_size = 640;
  bool use_ema = true;
  NeckKind neck_kind = NeckKind::AFPN;
  SppKind spp_kind = SppKind::SPPFCSPC;
  int ema_groups = 4;
  AnchorSet anchors = AnchorSet::defaults();

  /// Throws InvalidConfigError on any violated invariant.
  void validate() const;

  /// Writes every field as key=value.
  void store(KeyValueFile& kv) const;
  /// Applies one key. Returns false if the key is not a model key.
  bool apply(const std::string& key, const std::string& value);

  static ModelConfig base();  // no EMA, PAN neck, SPPF
  static ModelConfig full();  // EMA, AFPN, SPPFCSPC

  bool operator==(const ModelConfig& other) const;
};

/// base * width_multiple rounded up to a multiple of 8, never below 8.
int scale_channels(int base, double width_multiple);

/// max(round(base_repeats * depth_multiple), 1).
int scale_depth(int base_repeats, double depth_multiple);

}  // namespace oreyolo
