#include "oreyolo/profile.hpp"

#include <chrono>

#include "oreyolo/flops.hpp"
#include "oreyolo/model.hpp"

namespace oreyolo {

ProfileReport profile_model(const ModelConfig& cfg, int timed_runs) {
  torch::NoGradGuard no_grad;
  OreYolo model(cfg);
  model->eval();

  ProfileReport report;
  report.input_size = cfg.input_size;
  report.param_count = count_parameters(*model);

  auto input = torch::zeros({1, 3, cfg.input_size, cfg.input_size});
  {
    FlopCounter counter;
    model->forward(input);
    report.gflops = counter.gflops();
  }

  if (timed_runs > 0) {
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < timed_runs; ++i) {
      model->forward(input);
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    report.fps = timed_runs / elapsed.count();
  }
  return report;
}

}  // namespace oreyolo
