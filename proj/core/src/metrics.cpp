#include "oreyolo/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

namespace oreyolo {

std::array<double, 10> coco_thresholds() {
  std::array<double, 10> t{};
  for (int i = 0; i < 10; ++i) {
    t[i] = (50.0 + 5.0 * i) / 100.0;
  }
  return t;
}

std::vector<bool> match_detections(std::span<const EvalDetection> dets,
                                   std::span<const EvalTruth> gts, double iou_thr,
                                   std::vector<std::size_t>* order_out) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].det.confidence > dets[b].det.confidence;
  });

  std::map<std::pair<int, int>, std::vector<std::size_t>> by_key;  // (image, class) -> gt indices
  for (std::size_t g = 0; g < gts.size(); ++g) {
    by_key[{gts[g].image, gts[g].class_id}].push_back(g);
  }

  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> tp(dets.size(), false);
  for (std::size_t idx : order) {
    const auto& d = dets[idx];
    const auto it = by_key.find({d.image, d.det.class_id});
    if (it == by_key.end()) {
      continue;
    }
    double best_iou = -1.0;
    std::size_t best = gts.size();
    for (std::size_t g : it->second) {
      if (taken[g]) {
        continue;
      }
      const double overlap = iou(d.det.box, gts[g].box);
      if (overlap >= iou_thr && overlap > best_iou) {
        best_iou = overlap;
        best = g;
      }
    }
    if (best < gts.size()) {
      taken[best] = true;
      tp[idx] = true;
    }
  }
  if (order_out != nullptr) {
    *order_out = std::move(order);
  }
  return tp;
}

double average_precision(std::span<const EvalDetection> dets, std::span<const EvalTruth> gts,
                         double iou_thr) {
  if (gts.empty()) {
    return 0.0;
  }
  std::vector<std::size_t> order;
  const auto tp = match_detections(dets, gts, iou_thr, &order);

  const auto n = order.size();
  std::vector<double> precision(n), recall(n);
  double hits = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    hits += tp[order[i]] ? 1.0 : 0.0;
    precision[i] = hits / static_cast<double>(i + 1);
    recall[i] = hits / static_cast<double>(gts.size());
  }
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

EvalResult map_range(std::span<const EvalDetection> dets, std::span<const EvalTruth> gts,
                     int num_classes, double conf_threshold) {
  const auto thresholds = coco_thresholds();
  EvalResult result;
  result.per_class.resize(num_classes);
  result.truth_counts.assign(num_classes, 0);

  int present = 0;
  for (int c = 0; c < num_classes; ++c) {
    std::vector<EvalDetection> cd;
    std::vector<EvalDetection> confident;
    std::vector<EvalTruth> cg;
    for (const auto& d : dets) {
      if (d.det.class_id == c) {
        cd.push_back(d);
        if (d.det.confidence >= conf_threshold) {
          confident.push_back(d);
        }
      }
    }
    for (const auto& g : gts) {
      if (g.class_id == c) {
        cg.push_back(g);
      }
    }
    result.truth_counts[c] = static_cast<int>(cg.size());
    if (cg.empty()) {
      continue;
    }
    ++present;

    auto& m = result.per_class[c];
    double sum = 0.0;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      const double ap = average_precision(cd, cg, thresholds[t]);
      result.map_per_threshold[t] += ap;
      sum += ap;
      if (t == 0) {
        m.map50 = ap;
      } else if (t == 5) {
        m.map75 = ap;
      }
    }
    m.map50_95 = sum / static_cast<double>(thresholds.size());

    const auto tp = match_detections(confident, cg, 0.5);
    const auto hits = static_cast<double>(std::count(tp.begin(), tp.end(), true));
    m.precision = confident.empty() ? 0.0 : hits / static_cast<double>(confident.size());
    m.recall = hits / static_cast<double>(cg.size());

    result.overall.precision += m.precision;
    result.overall.recall += m.recall;
    result.overall.map50 += m.map50;
    result.overall.map75 += m.map75;
  }
  if (present > 0) {
    const double k = present;
    result.overall.precision /= k;
    result.overall.recall /= k;
    result.overall.map50 /= k;
    result.overall.map75 /= k;
    for (auto& v : result.map_per_threshold) {
      v /= k;
    }
    result.overall.map50_95 =
        std::accumulate(result.map_per_threshold.begin(), result.map_per_threshold.end(), 0.0) /
        static_cast<double>(thresholds.size());
  }
  return result;
}

namespace {

std::string class_name(const std::vector<std::string>& names, std::size_t c) {
  return c < names.size() ? names[c] : std::to_string(c);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void append_metrics(std::string& out, const std::string& prefix, const ClassMetrics& m) {
  out += prefix + ".Precision=" + fmt(m.precision) + "\n";
  out += prefix + ".Recall=" + fmt(m.recall) + "\n";
  out += prefix + ".mAP50=" + fmt(m.map50) + "\n";
  out += prefix + ".mAP75=" + fmt(m.map75) + "\n";
  out += prefix + ".mAP50-95=" + fmt(m.map50_95) + "\n";
}

}  // namespace

std::string format_report(const EvalResult& result, const std::vector<std::string>& class_names) {
  std::string out;
  append_metrics(out, "overall", result.overall);
  for (std::size_t c = 0; c < result.per_class.size(); ++c) {
    append_metrics(out, "class_" + class_name(class_names, c), result.per_class[c]);
    out += "class_" + class_name(class_names, c) + ".instances=" +
           std::to_string(result.truth_counts[c]) + "\n";
  }
  return out;
}

std::string format_csv(const EvalResult& result, const std::vector<std::string>& class_names) {
  std::string out = "class,Precision,Recall,mAP50,mAP75,mAP50-95\n";
  auto row = [&](const std::string& name, const ClassMetrics& m) {
    out += name + "," + fmt(m.precision) + "," + fmt(m.recall) + "," + fmt(m.map50) + "," +
           fmt(m.map75) + "," + fmt(m.map50_95) + "\n";
  };
  for (std::size_t c = 0; c < result.per_class.size(); ++c) {
    row(class_name(class_names, c), result.per_class[c]);
  }
  row("all", result.overall);
  return out;
}

}  // namespace oreyolo
