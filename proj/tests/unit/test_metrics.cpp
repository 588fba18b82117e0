#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oreyolo/box.hpp"
#include "oreyolo/metrics.hpp"
#include "reference.hpp"

using namespace oreyolo;
using testing::ap_reference;


TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 2, 2}, {0, 0, 2, 2}) == 1.0);
  CHECK(iou({0, 0, 1, 1}, {2, 2, 3, 3}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0));

  // Monte-Carlo area estimate over the bounding square [0,3]^2
  testing::Gen g(41);
  int in_a = 0, in_b = 0, in_both = 0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double x = g.real(0, 3), y = g.real(0, 3);
    const bool a = x < 2 && y < 2;
    const bool b = x > 1 && y > 1;
    in_a += a;
    in_b += b;
    in_both += a && b;
  }
  const double mc = static_cast<double>(in_both) / (in_a + in_b - in_both);
  CHECK(mc == doctest::Approx(1.0 / 7.0).epsilon(0.02));
}

TEST_CASE("average precision examples") {
  std::vector<EvalTruth> gts = {{0, 0, {0, 0, 10, 10}}};
  CHECK(average_precision(std::vector<EvalDetection>{{0, {{0, 0, 10, 10}, 0, 0.9}}}, gts, 0.5) == 1.0);
  CHECK(average_precision(std::vector<EvalDetection>{}, gts, 0.5) == 0.0);
  CHECK(average_precision(std::vector<EvalDetection>{{0, {{0, 0, 10, 10}, 0, 0.9}}}, {}, 0.5) == 0.0);
  // a confident false positive ahead of the true positive halves precision
  std::vector<EvalDetection> d = {{0, {{50, 50, 60, 60}, 0, 0.95}}, {0, {{0, 0, 10, 10}, 0, 0.9}}};
  CHECK(average_precision(d, gts, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("average precision matches the enumeration oracle") {
  testing::Gen g(42);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = testing::random_metric_instance(g, 1);
    for (double thr : {0.5, 0.75, 0.9}) {
      CHECK(std::abs(average_precision(in.dets, in.gts, thr) - ap_reference(in.dets, in.gts, thr)) < 1e-9);
    }
  }
}

TEST_CASE("map_range matches a per-threshold loop oracle") {
  testing::Gen g(43);
  const auto thresholds = coco_thresholds();
  for (int trial = 0; trial < 200; ++trial) {
    auto in = testing::random_metric_instance(g, 2);
    auto r = map_range(in.dets, in.gts, 2);
    std::array<double, 10> per_t{};
    int present = 0;
    for (int c = 0; c < 2; ++c) {
      std::vector<EvalDetection> cd;
      std::vector<EvalTruth> cg;
      for (const auto& d : in.dets) if (d.det.class_id == c) cd.push_back(d);
      for (const auto& t : in.gts) if (t.class_id == c) cg.push_back(t);
      if (cg.empty()) continue;
      ++present;
      for (int t = 0; t < 10; ++t) per_t[t] += ap_reference(cd, cg, thresholds[t]);
    }
    if (present == 0) {
      CHECK(r.overall.map50 == 0.0);
      continue;
    }
    for (auto& v : per_t) v /= present;
    const double mean = std::accumulate(per_t.begin(), per_t.end(), 0.0) / 10;
    CHECK(std::abs(r.overall.map50 - per_t[0]) < 1e-9);
    CHECK(std::abs(r.overall.map75 - per_t[5]) < 1e-9);
    CHECK(std::abs(r.overall.map50_95 - mean) < 1e-9);
    for (int t = 0; t < 10; ++t) CHECK(std::abs(r.map_per_threshold[t] - per_t[t]) < 1e-9);
    CHECK(r.overall.map50_95 <= r.overall.map50 + 1e-12);
    CHECK(r.overall.map75 <= r.overall.map50 + 1e-12);
  }
}

TEST_CASE("map_range examples") {
  std::vector<EvalTruth> gts = {{0, 0, {0, 0, 10, 10}}, {0, 1, {20, 20, 30, 30}}};
  std::vector<EvalDetection> perfect = {{0, {{0, 0, 10, 10}, 0, 0.9}}, {0, {{20, 20, 30, 30}, 1, 0.8}}};
  auto r = map_range(perfect, gts, 2);
  CHECK(r.overall.map50 == 1.0);
  CHECK(r.overall.map75 == 1.0);
  CHECK(r.overall.map50_95 == doctest::Approx(1.0));
  CHECK(r.overall.precision == 1.0);
  CHECK(r.overall.recall == 1.0);

  // IoU 0.52: passes 0.50 only
  std::vector<EvalTruth> one = {{0, 0, {0, 0, 10, 10}}};
  std::vector<EvalDetection> loose = {{0, {{0, 0, 10, 5.2}, 0, 0.9}}};
  r = map_range(loose, one, 1);
  CHECK(r.overall.map50 == 1.0);
  CHECK(r.overall.map75 == 0.0);
  CHECK(r.overall.map50_95 == doctest::Approx(0.1));

  // precision and recall use the operating confidence
  std::vector<EvalDetection> low = {{0, {{0, 0, 10, 10}, 0, 0.1}}};
  r = map_range(low, one, 1, 0.25);
  CHECK(r.overall.map50 == 1.0);
  CHECK(r.overall.recall == 0.0);
  CHECK(r.overall.precision == 0.0);
}

TEST_CASE("average precision invariants") {
  testing::Gen g(44);
  for (int trial = 0; trial < 200; ++trial) {
    auto in = testing::random_metric_instance(g, 1);
    double prev = 1.0;
    for (double thr : coco_thresholds()) {
      const double ap = average_precision(in.dets, in.gts, thr);
      CHECK(ap >= 0.0);
      CHECK(ap <= 1.0 + 1e-12);
      CHECK(ap <= prev + 1e-12);
      prev = ap;
    }

    const double base = average_precision(in.dets, in.gts, 0.5);
    auto extra = in.dets;
    extra.push_back({0, {{500, 500, 510, 510}, 0, -1.0}});  // unmatched, below everything
    CHECK(average_precision(extra, in.gts, 0.5) <= base + 1e-12);

    // distinct confidences: input order is irrelevant
    auto distinct = in.dets;
    for (std::size_t i = 0; i < distinct.size(); ++i) distinct[i].det.confidence = 0.5 + 0.01 * static_cast<double>(i);
    auto reversed = distinct;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(average_precision(distinct, in.gts, 0.5) == average_precision(reversed, in.gts, 0.5));
  }
}

TEST_CASE("report formats") {
  std::vector<EvalTruth> gts = {{0, 0, {0, 0, 10, 10}}};
  auto r = map_range(std::vector<EvalDetection>{{0, {{0, 0, 10, 10}, 0, 0.9}}}, gts, 2);
  const auto csv = format_csv(r, {"gold", "pyrite"});
  CHECK(csv.rfind("class,Precision,Recall,mAP50,mAP75,mAP50-95\n", 0) == 0);
  CHECK(csv.find("gold,1.000000,1.000000,1.000000,1.000000,1.000000") != std::string::npos);
  CHECK(csv.find("\nall,") != std::string::npos);
  const auto kv = format_report(r, {"gold", "pyrite"});
  for (const char* key : {"overall.Precision=", "overall.Recall=", "overall.mAP50=", "overall.mAP75=",
                          "overall.mAP50-95=", "class_gold.mAP50=", "class_pyrite.Recall="}) {
    CHECK(kv.find(key) != std::string::npos);
  }
}
