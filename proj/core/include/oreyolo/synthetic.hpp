#pragma once

#include <opencv2/core.hpp>

#include <cstdint>
#include <vector>

#include "oreyolo/dataset.hpp"

namespace oreyolo {

struct SyntheticOptions {
  int image_size = 320;
  int min_blobs = 1;
  int max_blobs = 10;
};

/// Rendered image plus one 8-bit mask per label (same order) marking the
/// blob's pixels.
struct SyntheticImage {
  DatasetSample sample;
  std::vector<cv::Mat> masks;
};

/// Two-class ore-like scene on a textured gray background. Class 0 blobs
/// are warm-hued speckled ellipses, class 1 cool-hued smooth ellipses.
/// Blobs never overlap; each box is the tight pixel bounding box of its
/// mask.
SyntheticImage render_synthetic(std::uint64_t seed, const SyntheticOptions& options = {});

/// n samples with ids "synth_00000", ...; sample i uses a seed derived
/// from (seed, i).
std::vector<DatasetSample> generate_synthetic(int n, std::uint64_t seed,
                                              const SyntheticOptions& options = {});

}  // namespace oreyolo
