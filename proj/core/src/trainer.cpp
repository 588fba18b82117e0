#include "oreyolo/trainer.hpp"

#include <opencv2/imgproc.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "oreyolo/augment.hpp"
#include "oreyolo/checkpoint.hpp"
#include "oreyolo/errors.hpp"
#include "oreyolo/inference.hpp"
#include "oreyolo/loss.hpp"

namespace oreyolo {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

DatasetSample resized(const DatasetSample& s, int size) {
  if (s.image.rows == size && s.image.cols == size) {
    return s;
  }
  DatasetSample out{cv::Mat(), s.labels, s.id};
  cv::resize(s.image, out.image, cv::Size(size, size), 0, 0, cv::INTER_LINEAR);
  return out;
}

double beta_sample(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0);
  std::gamma_distribution<double> gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}

DatasetSample maybe_mosaic(const std::vector<DatasetSample>& pool, std::size_t first,
                           const TrainConfig& config, Rng& rng) {
  const int size = config.model.input_size;
  if (uniform(rng, 0.0, 1.0) >= config.mosaic_probability) {
    return resized(pool[first], size);
  }
  std::vector<DatasetSample> tiles{pool[first]};
  for (int k = 0; k < 3; ++k) {
    tiles.push_back(pool[uniform_int(rng, 0, static_cast<int>(pool.size()) - 1)]);
  }
  return mosaic(tiles, size, rng);
}

std::vector<std::vector<BoxLabel>> labels_of(const std::vector<DatasetSample>& batch) {
  std::vector<std::vector<BoxLabel>> out;
  out.reserve(batch.size());
  for (const auto& s : batch) {
    out.push_back(s.labels);
  }
  return out;
}

LossTerms batch_loss(OreYolo& model, const std::vector<DatasetSample>& batch, const TrainConfig& config) {
  const int size = config.model.input_size;
  const auto images = batch_images(batch, size);
  const auto raw = model->forward(images);
  const auto matches = assign_targets(labels_of(batch), config.model.anchors, grids_for(size));
  return compute_loss(raw, matches, config.model.anchors, size, config.model.num_classes, config.loss,
                      config.label_smoothing);
}

void check_classes(const std::vector<DatasetSample>& samples, int num_classes) {
  for (const auto& s : samples) {
    for (const auto& l : s.labels) {
      if (l.class_id >= num_classes) {
        throw ConfigError("sample '" + s.id + "' has class " + std::to_string(l.class_id) +
                          " but num_classes is " + std::to_string(num_classes));
      }
    }
  }
}

}  // namespace

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix(seed, static_cast<std::uint64_t>(epoch)));
  for (std::size_t i = n; i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  return order;
}

DatasetSample compose_training_sample(const std::vector<DatasetSample>& pool, int epoch, std::size_t index,
                                      const TrainConfig& config) {
  if (pool.empty()) {
    throw DataError("training set is empty");
  }
  const auto order = epoch_order(pool.size(), config.seed, epoch);
  Rng rng(mix(mix(config.seed, static_cast<std::uint64_t>(epoch) + 0x51ED), index));
  DatasetSample sample = maybe_mosaic(pool, order[index % pool.size()], config, rng);
  if (uniform(rng, 0.0, 1.0) < config.mixup_probability) {
    const auto partner = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(pool.size()) - 1));
    const DatasetSample other = maybe_mosaic(pool, partner, config, rng);
    sample = mixup(sample, other, beta_sample(rng, 32.0, 32.0));
  }
  return sample;
}

std::unique_ptr<torch::optim::Optimizer> make_optimizer(OreYolo& model, const TrainConfig& config) {
  std::vector<torch::Tensor> decay;
  std::vector<torch::Tensor> no_decay;
  for (const auto& p : model->named_parameters()) {
    if (!p.value().requires_grad()) {
      continue;
    }
    (p.value().dim() == 4 ? decay : no_decay).push_back(p.value());
  }
  if (config.optimizer == OptimizerKind::AdamW) {
    auto with = torch::optim::AdamWOptions(config.learning_rate)
                    .betas({config.momentum, 0.999})
                    .weight_decay(config.weight_decay);
    auto without = torch::optim::AdamWOptions(config.learning_rate).betas({config.momentum, 0.999}).weight_decay(0.0);
    std::vector<torch::optim::OptimizerParamGroup> groups;
    groups.emplace_back(decay, std::make_unique<torch::optim::AdamWOptions>(with));
    groups.emplace_back(no_decay, std::make_unique<torch::optim::AdamWOptions>(without));
    return std::make_unique<torch::optim::AdamW>(groups, with);
  }
  auto with = torch::optim::SGDOptions(config.learning_rate)
                  .momentum(config.momentum)
                  .nesterov(true)
                  .weight_decay(config.weight_decay);
  auto without = torch::optim::SGDOptions(config.learning_rate).momentum(config.momentum).nesterov(true);
  std::vector<torch::optim::OptimizerParamGroup> groups;
  groups.emplace_back(decay, std::make_unique<torch::optim::SGDOptions>(with));
  groups.emplace_back(no_decay, std::make_unique<torch::optim::SGDOptions>(without));
  return std::make_unique<torch::optim::SGD>(groups, with);
}

void set_learning_rate(torch::optim::Optimizer& optimizer, double lr) {
  for (auto& group : optimizer.param_groups()) {
    group.options().set_lr(lr);
  }
}

double fitness(double map50, double map50_95) { return 0.1 * map50 + 0.9 * map50_95; }

std::string epoch_log_header() {
  return "epoch,box_loss,obj_loss,cls_loss,total_loss,val_mAP50,val_mAP50-95";
}

std::string epoch_log_row(const EpochLog& log) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%.8g,%.8g,%.8g,%.8g,%.6f,%.6f", log.epoch, log.box_loss, log.obj_loss,
                log.cls_loss, log.total_loss, log.val_map50, log.val_map50_95);
  return buf;
}

TrainResult train(const TrainConfig& config, const std::vector<DatasetSample>& train_set,
                  const std::vector<DatasetSample>& val_set, const TrainOptions& options) {
  config.validate();
  if (train_set.empty()) {
    throw DataError("training set is empty");
  }
  check_classes(train_set, config.model.num_classes);
  check_classes(val_set, config.model.num_classes);

  torch::manual_seed(config.seed);
  TrainResult result;
  result.model = OreYolo(config.model);
  auto& model = result.model;
  auto optimizer = make_optimizer(model, config);

  std::ofstream csv;
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
    csv.open(options.out_dir / "results.csv");
    csv << epoch_log_header() << "\n";
  }

  EvalOptions eval_options;
  eval_options.operating_confidence = config.confidence;
  eval_options.nms_iou = config.nms_iou;
  eval_options.max_det = static_cast<std::size_t>(config.max_det);

  const std::size_t n = train_set.size();
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    set_learning_rate(*optimizer, config.lr_at(epoch));
    model->train();

    EpochLog log;
    log.epoch = epoch + 1;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += bs) {
      std::vector<DatasetSample> batch;
      for (std::size_t i = start; i < std::min(n, start + bs); ++i) {
        batch.push_back(compose_training_sample(train_set, epoch, i, config));
      }
      auto terms = batch_loss(model, batch, config);
      optimizer->zero_grad();
      terms.total.backward();
      torch::nn::utils::clip_grad_norm_(model->parameters(), 10.0);
      optimizer->step();

      const auto v = terms.values();
      log.box_loss += v.box_loss;
      log.obj_loss += v.obj_loss;
      log.cls_loss += v.cls_loss;
      log.total_loss += v.total;
      ++batches;
    }
    log.box_loss /= batches;
    log.obj_loss /= batches;
    log.cls_loss /= batches;
    log.total_loss /= batches;

    const bool last = epoch + 1 == config.epochs;
    if (!val_set.empty() && ((epoch + 1) % config.eval_interval == 0 || last)) {
      const auto r = evaluate(model, val_set, eval_options);
      log.val_map50 = r.overall.map50;
      log.val_map50_95 = r.overall.map50_95;
      log.evaluated = true;
      const double f = fitness(log.val_map50, log.val_map50_95);
      if (f > result.best_fitness) {
        result.best_fitness = f;
        result.best_epoch = log.epoch;
        if (!options.out_dir.empty()) {
          save_checkpoint(options.out_dir / "best.pt", model, log.epoch, f);
        }
      }
    }
    if (!options.out_dir.empty()) {
      save_checkpoint(options.out_dir / "last.pt", model, log.epoch, fitness(log.val_map50, log.val_map50_95));
      csv << epoch_log_row(log) << "\n";
      csv.flush();
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.epochs.push_back(log);
    if (options.on_epoch) {
      options.on_epoch(log);
    }
  }
  return result;
}

OverfitResult overfit_one_batch(const TrainConfig& config, const std::vector<DatasetSample>& samples,
                                int steps) {
  config.validate();
  if (samples.empty()) {
    throw DataError("overfit needs at least one sample");
  }
  check_classes(samples, config.model.num_classes);
  std::vector<DatasetSample> batch;
  for (std::size_t i = 0; i < std::min(samples.size(), static_cast<std::size_t>(config.batch_size)); ++i) {
    batch.push_back(resized(samples[i], config.model.input_size));
  }

  torch::manual_seed(config.seed);
  OverfitResult result;
  result.model = OreYolo(config.model);
  auto& model = result.model;
  model->train();
  auto optimizer = make_optimizer(model, config);
  for (int step = 0; step < steps; ++step) {
    auto terms = batch_loss(model, batch, config);
    result.losses.push_back(terms.total.item<double>());
    optimizer->zero_grad();
    terms.total.backward();
    torch::nn::utils::clip_grad_norm_(model->parameters(), 10.0);
    optimizer->step();
  }
  return result;
}

}  // namespace oreyolo
