#pragma once

#include <opencv2/core.hpp>

#include <string>
#include <vector>

#include "oreyolo/box.hpp"

namespace oreyolo {

/// One line per detection: "class_id confidence x1 y1 x2 y2", pixels with
/// four decimals.
std::string format_detections(const std::vector<Detection>& detections);
/// Inverse of format_detections; DataError naming `source` on bad lines.
std::vector<Detection> parse_detections(const std::string& text, const std::string& source);

/// Fixed per-class BGR colour.
cv::Scalar class_color(int class_id);

/// Copy of `image` with each box (clipped to the frame) and a
/// "<class> <conf>" caption. Returns an untouched copy when `detections`
/// is empty.
cv::Mat annotate(const cv::Mat& image, const std::vector<Detection>& detections,
                 const std::vector<std::string>& class_names);

}  // namespace oreyolo
