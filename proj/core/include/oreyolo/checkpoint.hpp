#pragma once

#include <filesystem>

#include "oreyolo/model.hpp"

namespace oreyolo {

/// Single-file archive: named parameters and buffers, the model config as
/// key=value text, the epoch counter and the validation fitness.
struct CheckpointInfo {
  ModelConfig config;
  int epoch = 0;
  double fitness = 0.0;
};

void save_checkpoint(const std::filesystem::path& path, OreYolo& model, int epoch, double fitness);

struct LoadedCheckpoint {
  OreYolo model{nullptr};
  CheckpointInfo info;
};

/// ConfigError when the file is missing or not a checkpoint.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace oreyolo
