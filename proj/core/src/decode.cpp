#include "oreyolo/decode.hpp"

#include <algorithm>
#include <numeric>

#include "oreyolo/errors.hpp"

namespace oreyolo {

torch::Tensor decode_raw(const std::vector<torch::Tensor>& raw, const AnchorSet& anchors,
                         int input_size) {
  if (raw.size() != 3) {
    throw ShapeError("decode: expected three output scales");
  }
  std::vector<torch::Tensor> per_scale;
  for (int k = 0; k < 3; ++k) {
    const auto& out = raw[k];
    if (out.dim() != 4 || out.size(1) % AnchorSet::kPerScale != 0 ||
        out.size(1) / AnchorSet::kPerScale < 6) {
      throw ShapeError("decode: head channels must equal 3 * (5 + classes)");
    }
    const auto n = out.size(0);
    const auto per_anchor = out.size(1) / AnchorSet::kPerScale;
    const auto h = out.size(2);
    const auto w = out.size(3);
    const double stride = static_cast<double>(input_size) / static_cast<double>(w);
    auto p = out.view({n, AnchorSet::kPerScale, per_anchor, h, w}).permute({0, 1, 3, 4, 2}).sigmoid();

    auto opts = out.options();
    auto gy = torch::arange(h, opts).view({1, 1, h, 1, 1}).expand({n, AnchorSet::kPerScale, h, w, 1});
    auto gx = torch::arange(w, opts).view({1, 1, 1, w, 1}).expand({n, AnchorSet::kPerScale, h, w, 1});
    auto cell = torch::cat({gx, gy}, 4);
    std::vector<double> wh;
    for (const auto& a : anchors.scales[k]) {
      wh.push_back(a.width);
      wh.push_back(a.height);
    }
    auto anchor = torch::tensor(wh, torch::kDouble).to(opts.dtype()).view({1, AnchorSet::kPerScale, 1, 1, 2});

    auto xy = (p.narrow(4, 0, 2) * 2.0 - 0.5 + cell) * stride;
    auto size = (p.narrow(4, 2, 2) * 2.0).pow(2) * anchor;
    auto boxes = torch::cat({xy - size / 2.0, xy + size / 2.0}, 4).clamp(0.0, input_size);
    auto [cls_conf, cls_id] = p.narrow(4, 5, per_anchor - 5).max(4, /*keepdim=*/true);
    auto conf = p.narrow(4, 4, 1) * cls_conf;
    per_scale.push_back(torch::cat({boxes, conf, cls_id.to(opts.dtype())}, 4).view({n, -1, 6}));
  }
  return torch::cat(per_scale, 1);
}

std::vector<Detection> candidates_from_decoded(const torch::Tensor& decoded, double min_confidence) {
  auto rows_t = decoded.to(torch::kDouble).contiguous();
  const auto rows = rows_t.size(0);
  const auto* data = rows_t.data_ptr<double>();
  std::vector<Detection> out;
  for (std::int64_t i = 0; i < rows; ++i) {
    const double* r = data + i * 6;
    if (r[4] < min_confidence) {
      continue;
    }
    out.push_back({{r[0], r[1], r[2], r[3]}, static_cast<int>(r[5]), r[4]});
  }
  return out;
}

std::vector<Detection> decode_predictions(const std::vector<torch::Tensor>& raw,
                                          const AnchorSet& anchors, int input_size, int image,
                                          double min_confidence) {
  return candidates_from_decoded(decode_raw(raw, anchors, input_size).select(0, image), min_confidence);
}

std::vector<Detection> nms(std::span<const Detection> candidates, double iou_thr, double conf_thr,
                           std::size_t max_det) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].confidence >= conf_thr) {
      order.push_back(i);
    }
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return candidates[a].confidence > candidates[b].confidence;
  });

  std::vector<Detection> kept;
  std::vector<bool> removed(order.size(), false);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (removed[i]) {
      continue;
    }
    const auto& best = candidates[order[i]];
    kept.push_back(best);
    if (max_det != 0 && kept.size() >= max_det) {
      break;
    }
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      if (!removed[j] && candidates[order[j]].class_id == best.class_id &&
          iou(best.box, candidates[order[j]].box) > iou_thr) {
        removed[j] = true;
      }
    }
  }
  return kept;
}

}  // namespace oreyolo
