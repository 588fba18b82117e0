#pragma once

#include <torch/torch.h>

#include <array>
#include <span>
#include <vector>

#include "oreyolo/box.hpp"
#include "oreyolo/model_config.hpp"

namespace oreyolo {

// ---------------------------------------------------------------------------
// MPDIoU

/// IoU minus the squared distances between matching corners (top-left and
/// bottom-right), each normalised by img_w^2 + img_h^2. Range (-2, 1];
/// 1 iff the boxes coincide. Degenerate boxes contribute IoU = 0 and keep
/// the corner penalties.
double mpdiou(const Box& pred, const Box& gt, double img_w, double img_h);

/// 1 - mpdiou, in [0, 3).
double mpdiou_loss(const Box& pred, const Box& gt, double img_w, double img_h);

/// Closed-form gradient of mpdiou_loss with respect to the predicted
/// corners. Undefined on the measure-zero set where a predicted edge
/// coincides with a ground-truth edge.
struct CornerGradient {
  double x1 = 0.0, y1 = 0.0, x2 = 0.0, y2 = 0.0;
};
CornerGradient mpdiou_loss_gradient(const Box& pred, const Box& gt, double img_w, double img_h);

/// Differentiable batch form: pred and gt are (..., 4) corner tensors.
torch::Tensor mpdiou(const torch::Tensor& pred, const torch::Tensor& gt, double img_w, double img_h);

// ---------------------------------------------------------------------------
// Binary cross-entropy

/// Mean BCE over categories given predicted probabilities; targets are
/// smoothed to [s, 1 - s] with s = label_smoothing (0 -> s, 1 -> 1 - s).
double bce_cls(std::span<const double> probabilities, std::span<const double> targets,
               double label_smoothing);

/// Mean BCE over boxes; targets must be 0 or 1.
double bce_obj(std::span<const double> probabilities, std::span<const double> targets);

/// Logit forms used in training.
torch::Tensor bce_cls(const torch::Tensor& logits, const torch::Tensor& targets,
                      double label_smoothing);
torch::Tensor bce_obj(const torch::Tensor& logits, const torch::Tensor& targets);

// ---------------------------------------------------------------------------
// Target assignment

struct GridSpec {
  int height = 0;
  int width = 0;
  int stride = 0;
};

/// Grids of the three output scales for a square input.
std::array<GridSpec, 3> grids_for(int input_size);

/// One (ground truth, scale, anchor, cell) pairing.
struct TargetMatch {
  int scale = 0;
  int image = 0;
  int anchor = 0;
  int gx = 0;
  int gy = 0;
  int class_id = 0;
  Box box;  // ground truth in input pixels
};

/// A ground truth matches anchor a of a scale when
/// max(w/wa, wa/w, h/ha, ha/h) < ratio_threshold. Each match is emitted at
/// the cell containing the box centre and at the nearer horizontal and
/// vertical neighbour cells (when the centre is not exactly mid-cell and
/// the neighbour exists). Labels outside [0, 1] throw DataError.
std::vector<TargetMatch> assign_targets(const std::vector<std::vector<BoxLabel>>& gts_per_image,
                                        const AnchorSet& anchors,
                                        const std::array<GridSpec, 3>& grids,
                                        double ratio_threshold = 4.0);

// ---------------------------------------------------------------------------
// Composite loss

struct LossWeights {
  double alpha_box = 0.05;
  double alpha_obj = 1.0;
  double alpha_cls = 0.5;
  std::array<double, 3> alpha_balance = {4.0, 1.0, 0.4};  // strides 8, 16, 32

  void validate() const;  // all >= 0
};

/// Weighted components; total = box_loss + obj_loss + cls_loss.
struct LossBreakdown {
  double box_loss = 0.0;
  double obj_loss = 0.0;
  double cls_loss = 0.0;
  double total = 0.0;
};

struct LossTerms {
  torch::Tensor box;
  torch::Tensor obj;
  torch::Tensor cls;
  torch::Tensor total;
  std::array<torch::Tensor, 3> per_scale;  // each scale's contribution to total

  LossBreakdown values() const;
};

/// total = sum_k balance_k * (alpha_box * mean_matched(1 - MPDIoU)
///                            + alpha_obj * mean_all_cells(BCE_obj)
///                            + alpha_cls * mean_matched(BCE_cls)).
/// Objectness targets are 1 at matched (image, anchor, cell) entries and 0
/// elsewhere. Scales without matches contribute only the objectness term.
LossTerms compute_loss(const std::vector<torch::Tensor>& raw, const std::vector<TargetMatch>& matches,
                       const AnchorSet& anchors, int input_size, int num_classes,
                       const LossWeights& weights, double label_smoothing);

/// Convenience: assigns targets and returns plain numbers.
LossBreakdown total_loss(const std::vector<torch::Tensor>& raw,
                         const std::vector<std::vector<BoxLabel>>& gts_per_image,
                         const AnchorSet& anchors, int input_size, int num_classes,
                         const LossWeights& weights, double label_smoothing);

}  // namespace oreyolo
