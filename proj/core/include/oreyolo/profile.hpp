#pragma once

#include <cstdint>

#include "oreyolo/model_config.hpp"

namespace oreyolo {

struct ProfileReport {
  std::int64_t param_count = 0;
  double gflops = 0.0;  // at input_size, batch 1, 2 FLOPs per MAC
  double fps = 0.0;     // measured batch-1 inference rate; 0 when not timed
  int input_size = 0;
};

/// Builds the model for `cfg`, counts trainable parameters exactly and
/// counts conv/attention MACs in one batch-1 forward pass at
/// cfg.input_size. With `timed_runs` > 0 also measures FPS over that many
/// inference passes (after one warm-up).
ProfileReport profile_model(const ModelConfig& cfg, int timed_runs = 0);

}  // namespace oreyolo
