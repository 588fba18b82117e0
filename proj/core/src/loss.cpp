#include "oreyolo/loss.hpp"

#include <algorithm>
#include <cmath>

#include "oreyolo/errors.hpp"

namespace oreyolo {

namespace {

double corner_penalty(const Box& pred, const Box& gt, double img_w, double img_h) {
  const double norm = img_w * img_w + img_h * img_h;
  const double d1 = std::pow(pred.x1 - gt.x1, 2) + std::pow(pred.y1 - gt.y1, 2);
  const double d2 = std::pow(pred.x2 - gt.x2, 2) + std::pow(pred.y2 - gt.y2, 2);
  return d1 / norm + d2 / norm;
}

double clamped_log(double p) { return std::log(std::max(p, 1e-300)); }

double bce_term(double p, double t) {
  double loss = 0.0;
  if (t > 0.0) {
    loss -= t * clamped_log(p);
  }
  if (t < 1.0) {
    loss -= (1.0 - t) * clamped_log(1.0 - p);
  }
  return loss;
}

}  // namespace

double mpdiou(const Box& pred, const Box& gt, double img_w, double img_h) {
  if (!(img_w > 0.0) || !(img_h > 0.0)) {
    throw InvalidConfigError("mpdiou: image dims must be positive");
  }
  return iou(pred, gt) - corner_penalty(pred, gt, img_w, img_h);
}

double mpdiou_loss(const Box& pred, const Box& gt, double img_w, double img_h) {
  return 1.0 - mpdiou(pred, gt, img_w, img_h);
}

CornerGradient mpdiou_loss_gradient(const Box& p, const Box& g, double img_w, double img_h) {
  const double norm = img_w * img_w + img_h * img_h;
  CornerGradient grad;
  // Penalty part.
  grad.x1 = 2.0 * (p.x1 - g.x1) / norm;
  grad.y1 = 2.0 * (p.y1 - g.y1) / norm;
  grad.x2 = 2.0 * (p.x2 - g.x2) / norm;
  grad.y2 = 2.0 * (p.y2 - g.y2) / norm;

  // IoU part: d(1 - I/U) = -(dI * U - I * dU) / U^2, U = Ap + Ag - I.
  const double pw = p.x2 - p.x1;
  const double ph = p.y2 - p.y1;
  const double iw = std::min(p.x2, g.x2) - std::max(p.x1, g.x1);
  const double ih = std::min(p.y2, g.y2) - std::max(p.y1, g.y1);
  if (pw <= 0.0 || ph <= 0.0) {
    return grad;
  }
  const bool overlap = iw > 0.0 && ih > 0.0;
  const double inter = overlap ? iw * ih : 0.0;
  const double uni = pw * ph + g.area() - inter;
  if (uni <= 0.0) {
    return grad;
  }
  CornerGradient d_inter;
  if (overlap) {
    d_inter.x1 = p.x1 > g.x1 ? -ih : 0.0;
    d_inter.x2 = p.x2 < g.x2 ? ih : 0.0;
    d_inter.y1 = p.y1 > g.y1 ? -iw : 0.0;
    d_inter.y2 = p.y2 < g.y2 ? iw : 0.0;
  }
  const CornerGradient d_area{-ph, -pw, ph, pw};
  auto d_iou = [&](double di, double da) { return (di * uni - inter * (da - di)) / (uni * uni); };
  grad.x1 -= d_iou(d_inter.x1, d_area.x1);
  grad.y1 -= d_iou(d_inter.y1, d_area.y1);
  grad.x2 -= d_iou(d_inter.x2, d_area.x2);
  grad.y2 -= d_iou(d_inter.y2, d_area.y2);
  return grad;
}

torch::Tensor mpdiou(const torch::Tensor& pred, const torch::Tensor& gt, double img_w, double img_h) {
  using torch::indexing::Slice;
  auto px1 = pred.select(-1, 0), py1 = pred.select(-1, 1);
  auto px2 = pred.select(-1, 2), py2 = pred.select(-1, 3);
  auto gx1 = gt.select(-1, 0), gy1 = gt.select(-1, 1);
  auto gx2 = gt.select(-1, 2), gy2 = gt.select(-1, 3);
  auto iw = (torch::minimum(px2, gx2) - torch::maximum(px1, gx1)).clamp_min(0.0);
  auto ih = (torch::minimum(py2, gy2) - torch::maximum(py1, gy1)).clamp_min(0.0);
  auto inter = iw * ih;
  auto area_p = (px2 - px1).clamp_min(0.0) * (py2 - py1).clamp_min(0.0);
  auto area_g = (gx2 - gx1).clamp_min(0.0) * (gy2 - gy1).clamp_min(0.0);
  auto uni = area_p + area_g - inter + 1e-9;
  const double norm = img_w * img_w + img_h * img_h;
  auto d1 = (px1 - gx1).pow(2) + (py1 - gy1).pow(2);
  auto d2 = (px2 - gx2).pow(2) + (py2 - gy2).pow(2);
  return inter / uni - d1 / norm - d2 / norm;
}

double bce_cls(std::span<const double> probabilities, std::span<const double> targets,
               double label_smoothing) {
  if (probabilities.size() != targets.size()) {
    throw ShapeError("bce_cls: predictions and targets differ in length");
  }
  if (probabilities.empty()) {
    return 0.0;
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const double t = targets[i] * (1.0 - 2.0 * label_smoothing) + label_smoothing;
    sum += bce_term(probabilities[i], t);
  }
  return sum / static_cast<double>(probabilities.size());
}

double bce_obj(std::span<const double> probabilities, std::span<const double> targets) {
  for (double t : targets) {
    if (t != 0.0 && t != 1.0) {
      throw DataError("bce_obj: objectness targets must be 0 or 1");
    }
  }
  return bce_cls(probabilities, targets, 0.0);
}

torch::Tensor bce_cls(const torch::Tensor& logits, const torch::Tensor& targets,
                      double label_smoothing) {
  auto smoothed = targets * (1.0 - 2.0 * label_smoothing) + label_smoothing;
  return torch::binary_cross_entropy_with_logits(logits, smoothed);
}

torch::Tensor bce_obj(const torch::Tensor& logits, const torch::Tensor& targets) {
  return torch::binary_cross_entropy_with_logits(logits, targets);
}

std::array<GridSpec, 3> grids_for(int input_size) {
  std::array<GridSpec, 3> grids;
  for (int k = 0; k < 3; ++k) {
    grids[k] = {input_size / kStrides[k], input_size / kStrides[k], kStrides[k]};
  }
  return grids;
}

std::vector<TargetMatch> assign_targets(const std::vector<std::vector<BoxLabel>>& gts_per_image,
                                        const AnchorSet& anchors,
                                        const std::array<GridSpec, 3>& grids,
                                        double ratio_threshold) {
  std::vector<TargetMatch> matches;
  for (std::size_t b = 0; b < gts_per_image.size(); ++b) {
    for (const auto& gt : gts_per_image[b]) {
      if (gt.cx < 0.0 || gt.cx > 1.0 || gt.cy < 0.0 || gt.cy > 1.0 || gt.w <= 0.0 || gt.w > 1.0 ||
          gt.h <= 0.0 || gt.h > 1.0) {
        throw DataError("assign_targets: label outside [0, 1] in image " + std::to_string(b));
      }
      for (int k = 0; k < 3; ++k) {
        const auto& grid = grids[k];
        const double img_w = static_cast<double>(grid.width) * grid.stride;
        const double img_h = static_cast<double>(grid.height) * grid.stride;
        const double gw = gt.w * img_w;
        const double gh = gt.h * img_h;
        const double gx = gt.cx * grid.width;
        const double gy = gt.cy * grid.height;
        const int cx = std::min(static_cast<int>(gx), grid.width - 1);
        const int cy = std::min(static_cast<int>(gy), grid.height - 1);
        const double fx = gx - std::floor(gx);
        const double fy = gy - std::floor(gy);

        std::vector<std::pair<int, int>> cells = {{cx, cy}};
        if (fx < 0.5 && gx > 1.0) {
          cells.emplace_back(cx - 1, cy);
        } else if (fx > 0.5 && gx < grid.width - 1.0) {
          cells.emplace_back(cx + 1, cy);
        }
        if (fy < 0.5 && gy > 1.0) {
          cells.emplace_back(cx, cy - 1);
        } else if (fy > 0.5 && gy < grid.height - 1.0) {
          cells.emplace_back(cx, cy + 1);
        }

        for (int a = 0; a < AnchorSet::kPerScale; ++a) {
          const auto& anchor = anchors.scales[k][a];
          const double rw = gw / anchor.width;
          const double rh = gh / anchor.height;
          const double worst = std::max({rw, 1.0 / rw, rh, 1.0 / rh});
          if (!(worst < ratio_threshold)) {
            continue;
          }
          for (const auto& [x, y] : cells) {
            matches.push_back({k, static_cast<int>(b), a, x, y, gt.class_id, gt.to_pixels(img_w, img_h)});
          }
        }
      }
    }
  }
  return matches;
}

void LossWeights::validate() const {
  const bool ok = alpha_box >= 0.0 && alpha_obj >= 0.0 && alpha_cls >= 0.0 &&
                  std::all_of(alpha_balance.begin(), alpha_balance.end(), [](double v) { return v >= 0.0; });
  if (!ok) {
    throw InvalidConfigError("loss weights must be non-negative");
  }
}

LossBreakdown LossTerms::values() const {
  return {box.item<double>(), obj.item<double>(), cls.item<double>(), total.item<double>()};
}

LossTerms compute_loss(const std::vector<torch::Tensor>& raw, const std::vector<TargetMatch>& matches,
                       const AnchorSet& anchors, int input_size, int num_classes,
                       const LossWeights& weights, double label_smoothing) {
  if (raw.size() != 3) {
    throw ShapeError("compute_loss: expected three output scales");
  }
  const int per_anchor = 5 + num_classes;
  const auto opts = raw[0].options();
  LossTerms terms;
  terms.box = torch::zeros({}, opts);
  terms.obj = torch::zeros({}, opts);
  terms.cls = torch::zeros({}, opts);

  for (int k = 0; k < 3; ++k) {
    const auto& out = raw[k];
    if (out.dim() != 4 || out.size(1) != AnchorSet::kPerScale * per_anchor) {
      throw ShapeError("compute_loss: head output has wrong channel count");
    }
    const auto n = out.size(0);
    const auto h = out.size(2);
    const auto w = out.size(3);
    const double stride = static_cast<double>(input_size) / static_cast<double>(w);
    auto p = out.view({n, AnchorSet::kPerScale, per_anchor, h, w}).permute({0, 1, 3, 4, 2});

    std::vector<std::int64_t> bi, ai, yi, xi, ci;
    std::vector<double> tbox, anchor_wh, cell_xy;
    for (const auto& m : matches) {
      if (m.scale != k) {
        continue;
      }
      bi.push_back(m.image);
      ai.push_back(m.anchor);
      yi.push_back(m.gy);
      xi.push_back(m.gx);
      ci.push_back(m.class_id);
      tbox.insert(tbox.end(), {m.box.x1, m.box.y1, m.box.x2, m.box.y2});
      anchor_wh.insert(anchor_wh.end(), {anchors.scales[k][m.anchor].width, anchors.scales[k][m.anchor].height});
      cell_xy.insert(cell_xy.end(), {static_cast<double>(m.gx), static_cast<double>(m.gy)});
    }

    auto obj_target = torch::zeros({n, AnchorSet::kPerScale, h, w}, opts);
    auto scale_box = torch::zeros({}, opts);
    auto scale_cls = torch::zeros({}, opts);
    const auto count = static_cast<std::int64_t>(bi.size());
    if (count > 0) {
      const auto idx_opts = torch::TensorOptions().dtype(torch::kLong);
      auto b_t = torch::tensor(bi, idx_opts);
      auto a_t = torch::tensor(ai, idx_opts);
      auto y_t = torch::tensor(yi, idx_opts);
      auto x_t = torch::tensor(xi, idx_opts);
      auto ps = p.index({b_t, a_t, y_t, x_t});  // (count, per_anchor)

      auto cell = torch::tensor(cell_xy, torch::kDouble).view({count, 2}).to(opts.dtype());
      auto anchor = torch::tensor(anchor_wh, torch::kDouble).view({count, 2}).to(opts.dtype());
      auto target = torch::tensor(tbox, torch::kDouble).view({count, 4}).to(opts.dtype());
      auto xy = (ps.narrow(1, 0, 2).sigmoid() * 2.0 - 0.5 + cell) * stride;
      auto wh = (ps.narrow(1, 2, 2).sigmoid() * 2.0).pow(2) * anchor;
      auto pbox = torch::cat({xy - wh / 2.0, xy + wh / 2.0}, 1);
      scale_box = (1.0 - mpdiou(pbox, target, input_size, input_size)).mean();

      obj_target.index_put_({b_t, a_t, y_t, x_t}, 1.0);

      auto cls_target = torch::zeros({count, num_classes}, opts);
      cls_target.index_put_({torch::arange(count, idx_opts), torch::tensor(ci, idx_opts)}, 1.0);
      scale_cls = bce_cls(ps.narrow(1, 5, num_classes), cls_target, label_smoothing);
    }
    auto scale_obj = bce_obj(p.select(4, 4), obj_target);

    const double balance = weights.alpha_balance[k];
    auto box_part = balance * weights.alpha_box * scale_box;
    auto obj_part = balance * weights.alpha_obj * scale_obj;
    auto cls_part = balance * weights.alpha_cls * scale_cls;
    terms.per_scale[k] = box_part + obj_part + cls_part;
    terms.box = terms.box + box_part;
    terms.obj = terms.obj + obj_part;
    terms.cls = terms.cls + cls_part;
  }
  terms.total = terms.box + terms.obj + terms.cls;
  return terms;
}

LossBreakdown total_loss(const std::vector<torch::Tensor>& raw,
                         const std::vector<std::vector<BoxLabel>>& gts_per_image,
                         const AnchorSet& anchors, int input_size, int num_classes,
                         const LossWeights& weights, double label_smoothing) {
  const auto matches = assign_targets(gts_per_image, anchors, grids_for(input_size));
  return compute_loss(raw, matches, anchors, input_size, num_classes, weights, label_smoothing)
      .values();
}

}  // namespace oreyolo
