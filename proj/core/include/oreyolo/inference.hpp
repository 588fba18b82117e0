#pragma once

#include <opencv2/core.hpp>

#include <span>
#include <vector>

#include "oreyolo/dataset.hpp"
#include "oreyolo/metrics.hpp"
#include "oreyolo/model.hpp"

namespace oreyolo {

/// BGR 8-bit image -> (3, S, S) float RGB in [0, 1], stretched to S x S.
torch::Tensor image_to_tensor(const cv::Mat& bgr, int input_size);

/// Stacks samples into (N, 3, S, S).
torch::Tensor batch_images(std::span<const DatasetSample> samples, int input_size);

struct DetectOptions {
  double confidence = 0.25;
  double nms_iou = 0.45;
  std::size_t max_det = 300;
  std::size_t max_candidates = 3000;  // most confident kept before NMS
};

/// Detections per image in that image's own pixel coordinates.
std::vector<std::vector<Detection>> detect(OreYolo& model, std::span<const cv::Mat> images,
                                           const DetectOptions& options, int batch_size = 8);

struct EvalOptions {
  double eval_confidence = 0.001;  // candidate floor for the PR curves
  double operating_confidence = 0.25;
  double nms_iou = 0.45;
  std::size_t max_det = 300;
  int batch_size = 8;
};

/// Runs detection over the samples and scores it. DataError on an empty
/// sample list; ConfigError when a label's class is outside the model's.
EvalResult evaluate(OreYolo& model, std::span<const DatasetSample> samples,
                    const EvalOptions& options);

}  // namespace oreyolo
