#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "oreyolo/kv_file.hpp"
#include "oreyolo/loss.hpp"
#include "oreyolo/model_config.hpp"

namespace oreyolo {

enum class OptimizerKind { AdamW, SGD };
enum class LrSchedule { Constant, Cosine };

/// Training run settings. The file format is flat key=value; model keys
/// (depth_multiple, width_multiple, input_shape, ...) sit alongside:
///   epoch, optimizer, learning_rate, momentum, weight_decay, nms_iou,
///   label_smoothing, confidence, mixup_probability, mosaic_probability,
///   seed, batch_size, lr_schedule, final_lr_fraction, box_weight,
///   obj_weight, cls_weight, balance, eval_interval, max_det, dataset.
struct TrainConfig {
  ModelConfig model;
  LossWeights loss;
  int epochs = 100;
  OptimizerKind optimizer = OptimizerKind::AdamW;
  double learning_rate = 1e-3;
  double momentum = 0.937;  // first-moment coefficient for AdamW
  double weight_decay = 5e-4;
  double label_smoothing = 0.005;
  double nms_iou = 0.45;
  double confidence = 0.25;
  double mixup_probability = 0.5;
  double mosaic_probability = 0.5;
  std::uint64_t seed = 0;
  int batch_size = 16;
  LrSchedule lr_schedule = LrSchedule::Constant;
  double final_lr_fraction = 0.01;  // cosine only
  int eval_interval = 1;
  int max_det = 300;
  std::string dataset;  // dataset root; relative paths resolve against the config file

  void validate() const;  // InvalidConfigError

  KeyValueFile to_kv() const;
  /// Unknown keys raise ConfigError naming the key.
  static TrainConfig from_kv(const KeyValueFile& kv);
  static TrainConfig read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

  /// Learning rate for a 0-based epoch.
  double lr_at(int epoch) const;

  bool operator==(const TrainConfig& other) const;
};

}  // namespace oreyolo
