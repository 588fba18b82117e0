#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include <random>

#include "oreyolo/decode.hpp"
#include "oreyolo/metrics.hpp"
#include "oreyolo/model.hpp"

using namespace oreyolo;

namespace {

Box random_box(std::mt19937_64& rng, double extent) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w = 4 + u(rng) * extent / 4, h = 4 + u(rng) * extent / 4;
  const double x = u(rng) * (extent - w), y = u(rng) * (extent - h);
  return {x, y, x + w, y + h};
}

void BM_Forward(benchmark::State& state) {
  torch::set_num_threads(1);
  ModelConfig cfg = ModelConfig::full();
  cfg.input_size = static_cast<int>(state.range(0));
  torch::manual_seed(0);
  OreYolo model(cfg);
  model->eval();
  torch::NoGradGuard guard;
  auto x = torch::rand({1, 3, cfg.input_size, cfg.input_size});
  for (auto _ : state) {
    benchmark::DoNotOptimize(model->forward(x));
  }
}
BENCHMARK(BM_Forward)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

void BM_Nms(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Detection> c;
  for (int i = 0; i < state.range(0); ++i) c.push_back({random_box(rng, 640), static_cast<int>(i % 2), u(rng)});
  for (auto _ : state) {
    benchmark::DoNotOptimize(nms(c, 0.45, 0.001, 300));
  }
}
BENCHMARK(BM_Nms)->Arg(300)->Arg(3000);

void BM_MapRange(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<EvalTruth> gts;
  std::vector<EvalDetection> dets;
  const int images = static_cast<int>(state.range(0));
  for (int im = 0; im < images; ++im) {
    for (int k = 0; k < 8; ++k) {
      const Box b = random_box(rng, 640);
      gts.push_back({im, k % 2, b});
      dets.push_back({im, {{b.x1 + 2, b.y1 - 1, b.x2 + 1, b.y2 + 2}, k % 2, u(rng)}});
      dets.push_back({im, {random_box(rng, 640), k % 2, u(rng) * 0.3}});
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(map_range(dets, gts, 2));
  }
}
BENCHMARK(BM_MapRange)->Arg(50)->Arg(500)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
