#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "oreyolo/dataset.hpp"
#include "oreyolo/model.hpp"
#include "oreyolo/train_config.hpp"

namespace oreyolo {

/// The training image at position `index` of `epoch`: the shuffled sample,
/// optionally turned into a mosaic with three random partners and
/// optionally mixed up with a second composed sample (lambda ~ Beta(32, 32)).
/// Output is input_size x input_size. Depends only on (seed, epoch, index).
DatasetSample compose_training_sample(const std::vector<DatasetSample>& pool, int epoch,
                                      std::size_t index, const TrainConfig& config);

/// Seeded permutation of [0, n) for one epoch.
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

/// Adaptive optimiser with decay applied only to conv weights.
std::unique_ptr<torch::optim::Optimizer> make_optimizer(OreYolo& model, const TrainConfig& config);
void set_learning_rate(torch::optim::Optimizer& optimizer, double lr);

struct EpochLog {
  int epoch = 0;  // 1-based
  double box_loss = 0.0;
  double obj_loss = 0.0;
  double cls_loss = 0.0;
  double total_loss = 0.0;
  double val_map50 = 0.0;
  double val_map50_95 = 0.0;
  bool evaluated = false;
  double seconds = 0.0;
};

struct TrainOptions {
  std::filesystem::path out_dir;  // best.pt, last.pt, results.csv; empty = write nothing
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  OreYolo model{nullptr};  // final weights
  double best_fitness = -1.0;
  int best_epoch = 0;
};

/// fitness = 0.1 * mAP50 + 0.9 * mAP50-95.
double fitness(double map50, double map50_95);

/// Full training loop. The model is seeded from config.seed. Validation
/// runs every eval_interval epochs and on the last one (skipped when `val`
/// is empty).
TrainResult train(const TrainConfig& config, const std::vector<DatasetSample>& train_set,
                  const std::vector<DatasetSample>& val_set, const TrainOptions& options = {});

struct OverfitResult {
  std::vector<double> losses;  // total loss before each step
  OreYolo model{nullptr};
};

/// Repeats optimisation on one fixed, unaugmented batch (the first
/// batch_size samples).
OverfitResult overfit_one_batch(const TrainConfig& config, const std::vector<DatasetSample>& samples,
                                int steps = 200);

/// CSV header and row used for the training log.
std::string epoch_log_header();
std::string epoch_log_row(const EpochLog& log);

}  // namespace oreyolo
