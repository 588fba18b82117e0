#pragma once

#include <opencv2/core.hpp>

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "oreyolo/dataset.hpp"

namespace oreyolo {

using Rng = std::mt19937_64;

/// Uniform real in [lo, hi) from the top 53 bits of one draw.
double uniform(Rng& rng, double lo, double hi);
/// Uniform integer in [lo, hi].
int uniform_int(Rng& rng, int lo, int hi);

enum class AugmentOp { Noise, Rotate, Crop, Translate, Reflect, Brightness };

inline constexpr std::array<AugmentOp, 6> kAllAugmentOps = {
    AugmentOp::Noise,     AugmentOp::Rotate,  AugmentOp::Crop,
    AugmentOp::Translate, AugmentOp::Reflect, AugmentOp::Brightness};

std::string to_string(AugmentOp op);
AugmentOp parse_augment_op(const std::string& name);  // InvalidConfigError

struct AugmentPolicy {
  std::vector<AugmentOp> ops{kAllAugmentOps.begin(), kAllAugmentOps.end()};
  int copies = 4;  // offline expansion: augmented copies per original
  double mosaic_prob = 0.5;
  double mixup_prob = 0.5;
  double min_area_ratio = 0.25;  // clipped boxes keeping less than this are dropped

  void validate() const;
};

/// Per-axis map x' = sx * x + tx, y' = sy * y + ty in pixels.
struct AxisMap {
  double sx = 1.0;
  double sy = 1.0;
  double tx = 0.0;
  double ty = 0.0;
};

/// Maps labels from an image of size `src` into one of size `dst`, clips
/// each box to `region` (dst pixels) and drops boxes whose clipped area is
/// below min_area_ratio of their mapped area.
std::vector<BoxLabel> remap_labels(const std::vector<BoxLabel>& labels, cv::Size src,
                                   const AxisMap& map, cv::Size dst, const Box& region,
                                   double min_area_ratio);
std::vector<BoxLabel> remap_labels(const std::vector<BoxLabel>& labels, cv::Size src,
                                   const AxisMap& map, cv::Size dst, double min_area_ratio);

std::vector<BoxLabel> reflect_labels(const std::vector<BoxLabel>& labels, bool horizontal);
/// Clockwise quarter turns (any integer, taken mod 4).
std::vector<BoxLabel> rotate90_labels(const std::vector<BoxLabel>& labels, int quarter_turns);

// Geometric ops. Boxes follow the pixels.
DatasetSample reflect(const DatasetSample& s, bool horizontal);
DatasetSample rotate90(const DatasetSample& s, int quarter_turns);
/// Crops `region` and resizes it back to the original size.
DatasetSample crop(const DatasetSample& s, cv::Rect region, double min_area_ratio = 0.25);
/// Shifts by (dx, dy) pixels; uncovered area is filled with gray 114.
DatasetSample translate(const DatasetSample& s, int dx, int dy, double min_area_ratio = 0.25);

// Photometric ops. Labels are untouched.
DatasetSample adjust_brightness(const DatasetSample& s, double factor);
DatasetSample add_noise(const DatasetSample& s, double sigma, std::uint64_t seed);

/// Random combination of the policy's ops: each op is drawn with
/// probability 1/2 (at least one is applied), in the fixed order
/// noise, rotate, crop, translate, reflect, brightness.
DatasetSample augment(const DatasetSample& s, const AugmentPolicy& policy, Rng& rng);

/// Originals followed by policy.copies augmented copies of each
/// ("<id>_aug<k>").
std::vector<DatasetSample> expand_dataset(const std::vector<DatasetSample>& samples,
                                          const AugmentPolicy& policy, std::uint64_t seed);

/// Four tiles around `centre` on a size x size canvas. Each input is
/// resized to the canvas size; tile 0 shows its bottom-right part in the
/// top-left quadrant, tile 1 its bottom-left in the top-right, tile 2 its
/// top-right in the bottom-left and tile 3 its top-left in the
/// bottom-right.
DatasetSample mosaic_at(std::span<const DatasetSample> samples, int size, cv::Point centre,
                        double min_area_ratio = 0.25);
/// mosaic_at with a centre drawn uniformly from the middle half.
DatasetSample mosaic(std::span<const DatasetSample> samples, int size, Rng& rng,
                     double min_area_ratio = 0.25);

/// Pixel blend a * lambda + b * (1 - lambda) (b resized to a) with the
/// union of both label lists.
DatasetSample mixup(const DatasetSample& a, const DatasetSample& b, double lambda);

}  // namespace oreyolo
