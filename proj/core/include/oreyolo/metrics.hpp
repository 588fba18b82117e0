#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "oreyolo/box.hpp"

namespace oreyolo {

struct EvalDetection {
  int image = 0;
  Detection det;
};

struct EvalTruth {
  int image = 0;
  int class_id = 0;
  Box box;  // pixels
};

/// IoU thresholds 0.50, 0.55, ..., 0.95.
std::array<double, 10> coco_thresholds();

/// Per-detection true-positive flags after greedy matching. Detections are
/// visited in descending confidence (stable: ties keep input order); each
/// is matched to the unmatched same-image, same-class ground truth with the
/// highest IoU among those with IoU >= iou_thr. `order` receives the visit
/// order.
std::vector<bool> match_detections(std::span<const EvalDetection> dets,
                                   std::span<const EvalTruth> gts, double iou_thr,
                                   std::vector<std::size_t>* order = nullptr);

/// All-point interpolated AP: area under the monotone envelope of the
/// precision/recall curve. 0 when there are no ground truths.
double average_precision(std::span<const EvalDetection> dets, std::span<const EvalTruth> gts,
                         double iou_thr);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double map50 = 0.0;
  double map75 = 0.0;
  double map50_95 = 0.0;
};

struct EvalResult {
  std::vector<ClassMetrics> per_class;
  std::vector<int> truth_counts;
  ClassMetrics overall;
  std::array<double, 10> map_per_threshold{};  // class-averaged AP at each threshold
};

/// mAP at every threshold, per class then averaged over classes that have
/// ground truth. Precision and recall are taken at IoU 0.5 over detections
/// with confidence >= conf_threshold.
EvalResult map_range(std::span<const EvalDetection> dets, std::span<const EvalTruth> gts,
                     int num_classes, double conf_threshold = 0.25);

/// Flat key=value report (overall.* and class_<name>.* keys).
std::string format_report(const EvalResult& result, const std::vector<std::string>& class_names);

/// CSV with header class,Precision,Recall,mAP50,mAP75,mAP50-95 and one row
/// per class followed by an "all" row.
std::string format_csv(const EvalResult& result, const std::vector<std::string>& class_names);

}  // namespace oreyolo
