// One line per criterion: "PASS|FAIL <id> <name>: <measured> (<bound>)".
// Exit status is non-zero when any criterion fails.

#include <torch/torch.h>

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "oreyolo/augment.hpp"
#include "oreyolo/dataset.hpp"
#include "oreyolo/decode.hpp"
#include "oreyolo/ema.hpp"
#include "oreyolo/loss.hpp"
#include "oreyolo/metrics.hpp"
#include "oreyolo/model.hpp"
#include "oreyolo/neck.hpp"
#include "oreyolo/profile.hpp"
#include "oreyolo/sppfcspc.hpp"
#include "oreyolo/synthetic.hpp"
#include "oreyolo/trainer.hpp"
#include "reference.hpp"

using namespace oreyolo;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// tolerances
constexpr double kFullParams = 3.458e6;
constexpr double kBaseParams = 1.710e6;
constexpr double kEmaDelta = 0.039e6;
constexpr double kAfpnDelta = 0.138e6;
constexpr double kSppfcspcParams = 3.317e6;
constexpr double kParamTol = 0.05;
constexpr double kDeltaTol = 0.30;
constexpr double kProfileSeconds = 10.0;
constexpr double kFullGflops = 6.3;
constexpr double kSppfGflops = 5.0;
constexpr double kGflopTol = 0.15;
constexpr double kMpdiouExampleTol = 1e-9;
constexpr double kGradRelTol = 1e-5;
constexpr double kAsffSumTol = 1e-6;
constexpr double kAsffDegenerateTol = 1e-4;
constexpr double kPoolTol = 1e-6;
constexpr double kMetricTol = 1e-9;
constexpr double kTargetMap50 = 0.50;
constexpr double kTrainMinutes = 30.0;
constexpr double kOverfitRatio = 0.05;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c, d);
  return buf;
}

ModelConfig variant(bool ema, bool afpn, bool sppfcspc) {
  ModelConfig c = ModelConfig::base();
  c.use_ema = ema;
  c.neck_kind = afpn ? NeckKind::AFPN : NeckKind::PAN;
  c.spp_kind = sppfcspc ? SppKind::SPPFCSPC : SppKind::SPPF;
  return c;
}

double params(const ModelConfig& c) {
  OreYolo m(c);
  return static_cast<double>(count_parameters(*m));
}

Outcome c1_param_budget() {
  const auto t0 = Clock::now();
  const auto r = profile_model(ModelConfig::full());
  const double s = seconds_since(t0);
  const double p = static_cast<double>(r.param_count);
  return {within(p, kFullParams, kParamTol) && s < kProfileSeconds,
          fmt("params=%.0f target=%.0f +-5%%, profile %.2fs < %.0fs", p, kFullParams, s, kProfileSeconds)};
}

Outcome c2_ablation() {
  const double base = params(variant(false, false, false));
  const double ema = params(variant(true, false, false));
  const double afpn = params(variant(false, true, false));
  const double spp = params(variant(false, false, true));
  const double full = params(ModelConfig::full());
  const bool ok = within(base, kBaseParams, kParamTol) && within(ema - base, kEmaDelta, kDeltaTol) &&
                  within(afpn - base, kAfpnDelta, kDeltaTol) && within(spp, kSppfcspcParams, kParamTol) &&
                  base < ema && ema < afpn && afpn < spp && spp < full;
  std::ostringstream os;
  os << std::fixed << std::setprecision(0) << "base=" << base << " ema_delta=" << ema - base << " afpn_delta=" << afpn - base << " sppfcspc=" << spp
     << " full=" << full << " (ordering base<ema<afpn<sppfcspc<full)";
  return {ok, os.str()};
}

Outcome c3_flops() {
  const auto full = profile_model(ModelConfig::full());
  ModelConfig sppf = ModelConfig::full();
  sppf.spp_kind = SppKind::SPPF;
  const auto alt = profile_model(sppf);
  return {within(full.gflops, kFullGflops, kGflopTol) && within(alt.gflops, kSppfGflops, kGflopTol),
          fmt("full=%.3f target %.1f, sppf=%.3f target %.1f, +-15%%", full.gflops, kFullGflops, alt.gflops,
              kSppfGflops)};
}

Outcome c4_mpdiou() {
  struct Example {
    Box p, g;
    double w, h, loss;
  };
  const Example examples[] = {
      {{0, 0, 2, 2}, {0, 0, 2, 2}, 5, 7, 0.0},
      {{0, 0, 1, 1}, {1, 1, 2, 2}, 2, 2, 1.5},
      {{0, 0, 2, 2}, {1, 1, 3, 3}, 4, 4, 1.0 - (1.0 / 7.0 - 4.0 / 32.0)},
  };
  double worst_example = 0.0;
  for (const auto& e : examples) {
    worst_example = std::max(worst_example, std::abs(mpdiou_loss(e.p, e.g, e.w, e.h) - e.loss));
    worst_example = std::max(worst_example, std::abs(mpdiou(e.p, e.g, e.w, e.h) - testing::mpdiou_ref(e.p, e.g, e.w, e.h)));
  }

  testing::Gen g(404);
  double worst_grad = 0.0;
  int checked = 0;
  while (checked < 100) {
    const Box p = g.box(64.0, 2.0), t = g.box(64.0, 2.0);
    const double edges[] = {p.x1 - t.x1, p.x1 - t.x2, p.x2 - t.x1, p.x2 - t.x2,
                            p.y1 - t.y1, p.y1 - t.y2, p.y2 - t.y1, p.y2 - t.y2};
    if (std::any_of(std::begin(edges), std::end(edges), [](double e) { return std::abs(e) < 1e-3; })) continue;
    const auto grad = mpdiou_loss_gradient(p, t, 64, 64);
    const double analytic[4] = {grad.x1, grad.y1, grad.x2, grad.y2};
    for (int c = 0; c < 4; ++c) {
      const double h = 1e-6;
      Box up = p, down = p;
      double* u = c == 0 ? &up.x1 : c == 1 ? &up.y1 : c == 2 ? &up.x2 : &up.y2;
      double* d = c == 0 ? &down.x1 : c == 1 ? &down.y1 : c == 2 ? &down.x2 : &down.y2;
      *u += h;
      *d -= h;
      const double fd = (testing::mpdiou_ref(down, t, 64, 64) - testing::mpdiou_ref(up, t, 64, 64)) / (2 * h);
      worst_grad = std::max(worst_grad, std::abs(fd - analytic[c]) / std::max(1e-6, std::abs(fd)));
    }
    ++checked;
  }
  return {worst_example < kMpdiouExampleTol && worst_grad < kGradRelTol,
          fmt("example err %.2e < 1e-9, gradient rel err %.2e < 1e-5 over 100 pairs", worst_example, worst_grad)};
}

Outcome c5_asff() {
  torch::manual_seed(505);
  // 10 x 10 x 10 = 1000 positions
  double worst_sum = 0.0;
  bool envelope = true;
  for (int inputs : {2, 3}) {
    std::vector<torch::Tensor> lambdas, xs;
    for (int i = 0; i < inputs; ++i) {
      lambdas.push_back(torch::randn({10, 1, 10, 10}) * 4);
      xs.push_back(torch::randn({10, 6, 10, 10}));
    }
    auto w = asff_weights(lambdas);
    auto total = torch::zeros_like(w.maps[0]);
    for (const auto& m : w.maps) {
      envelope = envelope && (m >= 0).all().item<bool>() && (m <= 1).all().item<bool>();
      total += m;
    }
    worst_sum = std::max(worst_sum, (total - 1).abs().max().item<double>());
    auto y = asff_fuse(xs, w);
    auto stacked = torch::stack(xs);
    envelope = envelope && (y >= stacked.amin(0) - 1e-6).all().item<bool>() &&
               (y <= stacked.amax(0) + 1e-6).all().item<bool>();
  }
  auto a = torch::randn({2, 4, 5, 5});
  auto b = torch::randn({2, 4, 5, 5});
  auto c = torch::randn({2, 4, 5, 5});
  auto dominant = asff_weights({torch::full({2, 1, 5, 5}, 30.0f), torch::zeros({2, 1, 5, 5}), torch::zeros({2, 1, 5, 5})});
  const double degenerate = (asff_fuse({a, b, c}, dominant) - a).abs().max().item<double>();
  std::ostringstream os;
  os << fmt("sum err %.2e < 1e-6, envelope ", worst_sum) << (envelope ? "holds" : "VIOLATED")
     << fmt(", degenerate err %.2e < 1e-4", degenerate);
  return {worst_sum < kAsffSumTol && envelope && degenerate < kAsffDegenerateTol, os.str()};
}

Outcome c6_pooling() {
  torch::manual_seed(606);
  testing::Gen g(606);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    auto x = torch::randn({g.integer(1, 2), g.integer(1, 4), g.integer(1, 64), g.integer(1, 64)}) * 10 + 3;
    auto got = global_avg_pool2d(x).to(torch::kDouble).contiguous().view(-1);
    auto ref = testing::channel_means_ref(x);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      worst = std::max(worst, std::abs(got[i].item<double>() - ref[i]) / std::max(1.0, std::abs(ref[i])));
    }
  }
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto x = torch::randn({g.integer(1, 2), g.integer(1, 4), g.integer(1, 32), g.integer(1, 32)});
    auto chained = max_pool_same(max_pool_same(max_pool_same(x, 5), 5), 5);
    exact += torch::equal(chained, max_pool_same(x, 13)) && torch::equal(max_pool_same(x, 13), testing::max_filter(x, 13));
  }
  return {worst < kPoolTol && exact == 100,
          fmt("mean rel err %.2e < 1e-6, k5x3 == k13 on %.0f/100 maps", worst, exact)};
}

Outcome c7_metrics() {
  testing::Gen g(707);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    auto in = testing::random_metric_instance(g, 2);
    for (int c = 0; c < 2; ++c) {
      std::vector<EvalDetection> cd;
      std::vector<EvalTruth> cg;
      for (const auto& d : in.dets) if (d.det.class_id == c) cd.push_back(d);
      for (const auto& t : in.gts) if (t.class_id == c) cg.push_back(t);
      for (double thr : coco_thresholds()) {
        worst = std::max(worst, std::abs(average_precision(cd, cg, thr) - testing::ap_reference(cd, cg, thr)));
      }
    }
    auto ref = testing::map_per_threshold_reference(in.dets, in.gts, 2);
    auto r = map_range(in.dets, in.gts, 2);
    if (ref.empty()) {
      worst = std::max(worst, std::abs(r.overall.map50_95));
      continue;
    }
    const double mean = std::accumulate(ref.begin(), ref.end(), 0.0) / 10.0;
    worst = std::max({worst, std::abs(r.overall.map50 - ref[0]), std::abs(r.overall.map75 - ref[5]),
                      std::abs(r.overall.map50_95 - mean)});
  }
  int nms_exact = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Detection> c;
    for (int i = 0; i < 50; ++i) {
      c.push_back({g.box(100.0, 5.0), g.integer(0, 2), std::round(g.real(0.0, 1.0) * 20) / 20});
    }
    const double thr = g.real(0.2, 0.8);
    nms_exact += testing::same_detections(nms(c, thr, 0.25), testing::nms_reference(c, thr, 0.25));
  }
  return {worst < kMetricTol && nms_exact == 200,
          fmt("AP/mAP max err %.2e < 1e-9 over 200 instances, NMS exact on %.0f/200", worst, nms_exact)};
}

Outcome c8_training(const fs::path& work) {
  SyntheticOptions opt;
  opt.image_size = 320;
  const auto samples = generate_synthetic(200, 7, opt);
  const auto split = split_dataset(samples, {7.0, 2.0, 1.0}, 7);

  TrainConfig cfg;
  cfg.model.input_size = 320;
  cfg.epochs = 30;
  cfg.seed = 7;
  const auto t0 = Clock::now();
  double best = 0.0;
  TrainOptions to;
  to.out_dir = work / "desk";
  to.on_epoch = [&](const EpochLog& e) {
    std::fprintf(stderr, "  epoch %2d total %.4f mAP50 %.4f\n", e.epoch, e.total_loss, e.val_map50);
  };
  const auto result = train(cfg, split.train, split.val, to);
  for (const auto& e : result.epochs) best = std::max(best, e.val_map50);
  const double minutes = seconds_since(t0) / 60.0;

  TrainConfig ocfg;
  ocfg.model.input_size = 320;
  ocfg.batch_size = 4;
  ocfg.seed = 7;
  const auto over = overfit_one_batch(ocfg, split.train, 200);
  const double ratio = over.losses.back() / over.losses.front();

  return {best >= kTargetMap50 && minutes < kTrainMinutes && ratio < kOverfitRatio,
          fmt("best val mAP50 %.4f >= 0.50 in %.1f min < 30, overfit final/initial %.4f < 0.05", best, minutes,
              ratio)};
}

Outcome c9_determinism() {
  SyntheticOptions opt;
  opt.image_size = 96;
  opt.max_blobs = 4;
  const auto samples = generate_synthetic(8, 9, opt);
  TrainConfig cfg;
  cfg.model.input_size = 96;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.seed = 9;
  const auto a = train(cfg, samples, {});
  const auto b = train(cfg, samples, {});
  bool same_logs = a.epochs.size() == b.epochs.size();
  for (std::size_t i = 0; same_logs && i < a.epochs.size(); ++i) {
    same_logs = a.epochs[i].box_loss == b.epochs[i].box_loss && a.epochs[i].obj_loss == b.epochs[i].obj_loss &&
                a.epochs[i].cls_loss == b.epochs[i].cls_loss && a.epochs[i].total_loss == b.epochs[i].total_loss;
  }

  AugmentPolicy policy;
  const auto e1 = expand_dataset(samples, policy, 99);
  const auto e2 = expand_dataset(samples, policy, 99);
  bool same_aug = e1.size() == e2.size();
  for (std::size_t i = 0; same_aug && i < e1.size(); ++i) {
    same_aug = cv::norm(e1[i].image, e2[i].image, cv::NORM_INF) == 0.0 && e1[i].labels.size() == e2[i].labels.size();
    for (std::size_t k = 0; same_aug && k < e1[i].labels.size(); ++k) {
      const auto &p = e1[i].labels[k], &q = e2[i].labels[k];
      same_aug = p.class_id == q.class_id && p.cx == q.cx && p.cy == q.cy && p.w == q.w && p.h == q.h;
    }
  }
  bool same_compose = true;
  cfg.mosaic_probability = 1.0;
  cfg.mixup_probability = 1.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto x = compose_training_sample(samples, 1, i, cfg);
    const auto y = compose_training_sample(samples, 1, i, cfg);
    same_compose = same_compose && cv::norm(x.image, y.image, cv::NORM_INF) == 0.0 && x.labels.size() == y.labels.size();
  }
  std::ostringstream os;
  os << "loss logs " << (same_logs ? "identical" : "DIFFER") << " over " << a.epochs.size() << " epochs, augmentation "
     << (same_aug && same_compose ? "identical" : "DIFFERS");
  return {same_logs && same_aug && same_compose, os.str()};
}

Outcome c10_data_pipeline() {
  const auto s = split_indices(6090, {7.0, 2.0, 1.0}, 0);
  const bool sizes = s.train.size() == 4263 && s.val.size() == 1218 && s.test.size() == 609;

  testing::Gen g(1010);
  int contained = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    DatasetSample x;
    x.image = cv::Mat(g.integer(16, 64), g.integer(16, 64), CV_8UC3, cv::Scalar::all(g.integer(0, 255)));
    for (int i = g.integer(1, 6); i > 0; --i) x.labels.push_back(g.label(2, 0.05, 0.7));
    DatasetSample out;
    switch (trial % 5) {
      case 0: out = rotate90(x, g.integer(-5, 5)); break;
      case 1: {
        const int w = g.integer(4, x.image.cols), h = g.integer(4, x.image.rows);
        out = crop(x, {g.integer(0, x.image.cols - w), g.integer(0, x.image.rows - h), w, h});
        break;
      }
      case 2: out = translate(x, g.integer(-x.image.cols, x.image.cols), g.integer(-x.image.rows, x.image.rows)); break;
      case 3: out = reflect(x, g.coin()); break;
      default: {
        std::array<DatasetSample, 4> tiles = {x, x, x, x};
        out = mosaic_at(tiles, 64, {g.integer(0, 64), g.integer(0, 64)});
      }
    }
    bool ok = true;
    for (const auto& l : out.labels) ok = ok && testing::inside_unit_square(l);
    contained += ok;
  }
  int composed = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const BoxLabel l = g.label();
    const auto back = rotate90_labels(rotate90_labels({l}, 1), 3)[0];
    const auto half = rotate90_labels(rotate90_labels({l}, 2), 2)[0];
    composed += std::abs(back.cx - l.cx) < 1e-9 && std::abs(back.cy - l.cy) < 1e-9 && std::abs(back.w - l.w) < 1e-9 &&
                std::abs(back.h - l.h) < 1e-9 && std::abs(half.cx - l.cx) < 1e-9 && std::abs(half.cy - l.cy) < 1e-9;
  }
  return {sizes && contained == 1000 && composed == 1000,
          fmt("split %.0f/%.0f/%.0f, containment %.0f/1000", double(s.train.size()), double(s.val.size()),
              double(s.test.size()), contained) +
              fmt(", rotate composition %.0f/1000", composed)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path workdir = fs::temp_directory_path() / "oreyolo_acceptance";
  std::vector<int> only;
  app.add_option("--workdir", workdir, "scratch directory for training outputs");
  app.add_option("--only", only, "run only these criteria (1-10)");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);
  torch::set_num_threads(1);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1 parameter budget", c1_param_budget},
      {"C2 ablation deltas", c2_ablation},
      {"C3 flop budget", c3_flops},
      {"C4 mpdiou suite", c4_mpdiou},
      {"C5 asff invariants", c5_asff},
      {"C6 pooling equivalence", c6_pooling},
      {"C7 metric oracles", c7_metrics},
      {"C8 desk-scale training", [&] { return c8_training(workdir); }},
      {"C9 determinism", c9_determinism},
      {"C10 data pipeline", c10_data_pipeline},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), static_cast<int>(i + 1)) == only.end()) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << criteria[i].first << ": " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
