#include "oreyolo/train_config.hpp"

#include <cmath>
#include <numbers>

#include "oreyolo/errors.hpp"

namespace oreyolo {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) {
    throw InvalidConfigError(what);
  }
}

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

}  // namespace

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  require(epochs >= 1, "epoch must be >= 1");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(label_smoothing >= 0.0 && label_smoothing < 0.5, "label_smoothing must lie in [0, 0.5)");
  require(in_unit(nms_iou), "nms_iou must lie in [0, 1]");
  require(in_unit(confidence), "confidence must lie in [0, 1]");
  require(in_unit(mixup_probability), "mixup_probability must lie in [0, 1]");
  require(in_unit(mosaic_probability), "mosaic_probability must lie in [0, 1]");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(final_lr_fraction > 0.0 && final_lr_fraction <= 1.0, "final_lr_fraction must lie in (0, 1]");
  require(eval_interval >= 1, "eval_interval must be >= 1");
  require(max_det >= 1, "max_det must be >= 1");
}

KeyValueFile TrainConfig::to_kv() const {
  KeyValueFile kv;
  model.store(kv);
  kv.set("epoch", std::to_string(epochs));
  kv.set("optimizer", optimizer == OptimizerKind::AdamW ? "adamw" : "sgd");
  kv.set("learning_rate", format_real(learning_rate));
  kv.set("momentum", format_real(momentum));
  kv.set("weight_decay", format_real(weight_decay));
  kv.set("nms_iou", format_real(nms_iou));
  kv.set("label_smoothing", format_real(label_smoothing));
  kv.set("confidence", format_real(confidence));
  kv.set("mixup_probability", format_real(mixup_probability));
  kv.set("mosaic_probability", format_real(mosaic_probability));
  kv.set("seed", std::to_string(seed));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("lr_schedule", lr_schedule == LrSchedule::Constant ? "constant" : "cosine");
  kv.set("final_lr_fraction", format_real(final_lr_fraction));
  kv.set("box_weight", format_real(loss.alpha_box));
  kv.set("obj_weight", format_real(loss.alpha_obj));
  kv.set("cls_weight", format_real(loss.alpha_cls));
  kv.set("balance", format_real(loss.alpha_balance[0]) + "," + format_real(loss.alpha_balance[1]) +
                        "," + format_real(loss.alpha_balance[2]));
  kv.set("eval_interval", std::to_string(eval_interval));
  kv.set("max_det", std::to_string(max_det));
  kv.set("dataset", dataset);
  return kv;
}

TrainConfig TrainConfig::from_kv(const KeyValueFile& kv) {
  TrainConfig c;
  for (const auto& [key, value] : kv.entries) {
    if (c.model.apply(key, value)) {
      continue;
    }
    if (key == "epoch") {
      c.epochs = static_cast<int>(parse_integer(key, value));
    } else if (key == "optimizer") {
      if (value == "adamw" || value == "AdamW") {
        c.optimizer = OptimizerKind::AdamW;
      } else if (value == "sgd" || value == "SGD") {
        c.optimizer = OptimizerKind::SGD;
      } else {
        throw ConfigError("config key 'optimizer': expected adamw or sgd, got '" + value + "'");
      }
    } else if (key == "learning_rate") {
      c.learning_rate = parse_real(key, value);
    } else if (key == "momentum") {
      c.momentum = parse_real(key, value);
    } else if (key == "weight_decay") {
      c.weight_decay = parse_real(key, value);
    } else if (key == "nms_iou") {
      c.nms_iou = parse_real(key, value);
    } else if (key == "label_smoothing") {
      c.label_smoothing = parse_real(key, value);
    } else if (key == "confidence") {
      c.confidence = parse_real(key, value);
    } else if (key == "mixup_probability") {
      c.mixup_probability = parse_real(key, value);
    } else if (key == "mosaic_probability") {
      c.mosaic_probability = parse_real(key, value);
    } else if (key == "seed") {
      const auto s = parse_integer(key, value);
      if (s < 0) {
        throw ConfigError("config key 'seed': must be >= 0");
      }
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "batch_size") {
      c.batch_size = static_cast<int>(parse_integer(key, value));
    } else if (key == "lr_schedule") {
      if (value == "constant") {
        c.lr_schedule = LrSchedule::Constant;
      } else if (value == "cosine") {
        c.lr_schedule = LrSchedule::Cosine;
      } else {
        throw ConfigError("config key 'lr_schedule': expected constant or cosine, got '" + value + "'");
      }
    } else if (key == "final_lr_fraction") {
      c.final_lr_fraction = parse_real(key, value);
    } else if (key == "box_weight") {
      c.loss.alpha_box = parse_real(key, value);
    } else if (key == "obj_weight") {
      c.loss.alpha_obj = parse_real(key, value);
    } else if (key == "cls_weight") {
      c.loss.alpha_cls = parse_real(key, value);
    } else if (key == "balance") {
      const auto v = parse_real_list(key, value);
      if (v.size() != 3) {
        throw ConfigError("config key 'balance': expected 3 comma-separated values");
      }
      c.loss.alpha_balance = {v[0], v[1], v[2]};
    } else if (key == "eval_interval") {
      c.eval_interval = static_cast<int>(parse_integer(key, value));
    } else if (key == "max_det") {
      c.max_det = static_cast<int>(parse_integer(key, value));
    } else if (key == "dataset") {
      c.dataset = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  try {
    c.validate();
  } catch (const InvalidConfigError& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

TrainConfig TrainConfig::read(const std::filesystem::path& path) {
  return from_kv(KeyValueFile::read(path));
}

void TrainConfig::write(const std::filesystem::path& path) const { to_kv().write(path); }

double TrainConfig::lr_at(int epoch) const {
  if (lr_schedule == LrSchedule::Constant) {
    return learning_rate;
  }
  const double t = static_cast<double>(epoch) / std::max(1, epochs - 1);
  return learning_rate *
         (final_lr_fraction + (1.0 - final_lr_fraction) * 0.5 * (1.0 + std::cos(std::numbers::pi * t)));
}

bool TrainConfig::operator==(const TrainConfig& o) const {
  return model == o.model && loss.alpha_box == o.loss.alpha_box && loss.alpha_obj == o.loss.alpha_obj &&
         loss.alpha_cls == o.loss.alpha_cls && loss.alpha_balance == o.loss.alpha_balance &&
         epochs == o.epochs && optimizer == o.optimizer && learning_rate == o.learning_rate &&
         momentum == o.momentum && weight_decay == o.weight_decay &&
         label_smoothing == o.label_smoothing && nms_iou == o.nms_iou && confidence == o.confidence &&
         mixup_probability == o.mixup_probability && mosaic_probability == o.mosaic_probability &&
         seed == o.seed && batch_size == o.batch_size && lr_schedule == o.lr_schedule &&
         final_lr_fraction == o.final_lr_fraction && eval_interval == o.eval_interval &&
         max_det == o.max_det && dataset == o.dataset;
}

}  // namespace oreyolo
