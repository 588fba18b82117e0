#pragma once

#include <torch/torch.h>

#include <span>
#include <vector>

#include "oreyolo/box.hpp"
#include "oreyolo/model_config.hpp"

namespace oreyolo {

/// Decodes raw head outputs into a (N, M, 6) tensor of candidates with
/// columns x1, y1, x2, y2, confidence, class. M = 3 * sum(H_k * W_k).
///   centre = (cell + 2 * sigmoid(t_xy) - 0.5) * stride
///   size   = (2 * sigmoid(t_wh))^2 * anchor
///   confidence = sigmoid(p_0) * max_c sigmoid(class_logit_c)
/// Boxes are clipped to [0, input_size].
torch::Tensor decode_raw(const std::vector<torch::Tensor>& raw, const AnchorSet& anchors,
                         int input_size);

/// Candidates of one image whose confidence is >= min_confidence, ordered
/// by scale, anchor, row, column.
std::vector<Detection> decode_predictions(const std::vector<torch::Tensor>& raw,
                                          const AnchorSet& anchors, int input_size,
                                          int image = 0, double min_confidence = 0.0);

/// Rows of one image's (M, 6) decode_raw slice with confidence >=
/// min_confidence.
std::vector<Detection> candidates_from_decoded(const torch::Tensor& decoded, double min_confidence);

/// Greedy per-class suppression. Drops candidates with confidence below
/// conf_thr, then repeatedly keeps the most confident remaining box and
/// removes same-class boxes with IoU > iou_thr. Ties keep input order.
/// `max_det` (0 = unlimited) caps the number of kept boxes.
std::vector<Detection> nms(std::span<const Detection> candidates, double iou_thr, double conf_thr,
                           std::size_t max_det = 0);

}  // namespace oreyolo
