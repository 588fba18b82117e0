#include <CLI11.hpp>
#include <opencv2/imgcodecs.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "oreyolo/annotate.hpp"
#include "oreyolo/augment.hpp"
#include "oreyolo/checkpoint.hpp"
#include "oreyolo/dataset.hpp"
#include "oreyolo/errors.hpp"
#include "oreyolo/inference.hpp"
#include "oreyolo/metrics.hpp"
#include "oreyolo/profile.hpp"
#include "oreyolo/synthetic.hpp"
#include "oreyolo/train_config.hpp"
#include "oreyolo/trainer.hpp"

namespace fs = std::filesystem;
using namespace oreyolo;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataError("cannot write " + path.string());
  }
  out << text;
}

fs::path dataset_root(const TrainConfig& cfg, const fs::path& config_path, const std::string& override_dir) {
  if (!override_dir.empty()) {
    return override_dir;
  }
  if (cfg.dataset.empty()) {
    throw ConfigError("no dataset: set 'dataset' in the config or pass --data");
  }
  fs::path root = cfg.dataset;
  if (root.is_relative() && !config_path.empty()) {
    root = config_path.parent_path() / root;
  }
  return root;
}

std::vector<DatasetSample> load_split_verbose(const fs::path& root, const std::string& split) {
  std::vector<std::string> warnings;
  auto samples = load_split(root, split, &warnings);
  for (const auto& w : warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  return samples;
}

void check_class_names(const fs::path& root, int num_classes) {
  const auto names = read_class_names(root);
  if (!names.empty() && static_cast<int>(names.size()) != num_classes) {
    throw ConfigError("dataset " + root.string() + " has " + std::to_string(names.size()) +
                      " classes but the model has " + std::to_string(num_classes));
  }
}

struct TrainArgs {
  std::string config;
  std::string out = "runs/train";
  std::string data;
  std::int64_t seed = -1;
  bool overfit = false;
  int steps = 200;
};

int run_train(const TrainArgs& a) {
  auto cfg = TrainConfig::read(a.config);
  if (a.seed >= 0) {
    cfg.seed = static_cast<std::uint64_t>(a.seed);
  }
  const fs::path root = dataset_root(cfg, a.config, a.data);
  check_class_names(root, cfg.model.num_classes);
  const auto train_set = load_split_verbose(root, "train");
  fs::create_directories(a.out);
  cfg.write(fs::path(a.out) / "config.cfg");

  if (a.overfit) {
    const auto r = overfit_one_batch(cfg, train_set, a.steps);
    std::ofstream csv(fs::path(a.out) / "overfit.csv");
    csv << "step,total_loss\n";
    for (std::size_t i = 0; i < r.losses.size(); ++i) {
      csv << i << "," << r.losses[i] << "\n";
    }
    auto model = r.model;
    save_checkpoint(fs::path(a.out) / "overfit.pt", model, 0, 0.0);
    std::printf("overfit: initial loss %.6f, final loss %.6f (ratio %.4f)\n", r.losses.front(), r.losses.back(),
                r.losses.back() / r.losses.front());
    return 0;
  }

  std::vector<DatasetSample> val_set;
  if (fs::exists(root / "val.txt")) {
    val_set = load_split_verbose(root, "val");
  } else {
    std::cerr << "warning: no val.txt under " << root << "; training without validation\n";
  }
  std::printf("train: %zu images, val: %zu images, %d epochs at %d px\n", train_set.size(), val_set.size(),
              cfg.epochs, cfg.model.input_size);
  TrainOptions options;
  options.out_dir = a.out;
  options.on_epoch = [](const EpochLog& log) {
    std::printf("epoch %3d  box %.5f  obj %.5f  cls %.5f  total %.5f", log.epoch, log.box_loss, log.obj_loss,
                log.cls_loss, log.total_loss);
    if (log.evaluated) {
      std::printf("  mAP50 %.4f  mAP50-95 %.4f", log.val_map50, log.val_map50_95);
    }
    std::printf("  (%.1fs)\n", log.seconds);
    std::fflush(stdout);
  };
  const auto result = train(cfg, train_set, val_set, options);
  std::printf("best epoch %d (fitness %.4f); checkpoints in %s\n", result.best_epoch, result.best_fitness,
              a.out.c_str());
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string config;
  std::string data;
  std::string split = "val";
  std::string out;
};

int run_eval(const EvalArgs& a) {
  auto loaded = load_checkpoint(a.checkpoint);
  TrainConfig cfg;
  if (!a.config.empty()) {
    cfg = TrainConfig::read(a.config);
  }
  const fs::path root = dataset_root(cfg, a.config, a.data);
  const int nc = loaded.info.config.num_classes;
  check_class_names(root, nc);
  const auto samples = load_split_verbose(root, a.split);

  EvalOptions options;
  options.operating_confidence = cfg.confidence;
  options.nms_iou = cfg.nms_iou;
  options.max_det = static_cast<std::size_t>(cfg.max_det);
  const auto result = evaluate(loaded.model, samples, options);

  auto names = read_class_names(root);
  const auto report = format_report(result, names);
  const auto csv = format_csv(result, names);
  std::cout << "split=" << a.split << "\nimages=" << samples.size() << "\n" << report << "\n" << csv;
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_file(fs::path(a.out) / "report.txt", report);
    write_file(fs::path(a.out) / "metrics.csv", csv);
  }
  return 0;
}

struct PredictArgs {
  std::string checkpoint;
  std::string config;
  std::vector<std::string> images;
  std::string out = "runs/predict";
  double confidence = -1.0;
  double iou = -1.0;
  std::string names_file;
};

int run_predict(const PredictArgs& a) {
  auto loaded = load_checkpoint(a.checkpoint);
  TrainConfig cfg;
  if (!a.config.empty()) {
    cfg = TrainConfig::read(a.config);
  }
  DetectOptions options;
  options.confidence = a.confidence >= 0.0 ? a.confidence : cfg.confidence;
  options.nms_iou = a.iou >= 0.0 ? a.iou : cfg.nms_iou;
  options.max_det = static_cast<std::size_t>(cfg.max_det);

  std::vector<std::string> names;
  if (!a.names_file.empty()) {
    names = read_manifest(a.names_file);
  }
  fs::create_directories(a.out);
  int failures = 0;
  for (const auto& path : a.images) {
    const cv::Mat image = cv::imread(path, cv::IMREAD_COLOR);
    if (image.empty()) {
      std::cerr << "warning: cannot read image " << path << "; skipped\n";
      ++failures;
      continue;
    }
    const auto dets = detect(loaded.model, std::span<const cv::Mat>(&image, 1), options).front();
    const fs::path src(path);
    const fs::path image_out = fs::path(a.out) / src.filename();
    if (dets.empty()) {
      fs::copy_file(src, image_out, fs::copy_options::overwrite_existing);
    } else if (!cv::imwrite(image_out.string(), annotate(image, dets, names))) {
      throw DataError("cannot write " + image_out.string());
    }
    write_file(fs::path(a.out) / (src.stem().string() + ".txt"), format_detections(dets));
    std::printf("%s: %zu detections\n", path.c_str(), dets.size());
  }
  return failures == static_cast<int>(a.images.size()) && failures > 0 ? 1 : 0;
}

struct ProfileArgs {
  std::string config;
  int input_size = 0;
  int runs = 10;
};

int run_profile(const ProfileArgs& a) {
  ModelConfig model = ModelConfig::full();
  if (!a.config.empty()) {
    model = TrainConfig::read(a.config).model;
  }
  if (a.input_size > 0) {
    model.input_size = a.input_size;
  }
  const auto r = profile_model(model, a.runs);
  std::printf("params=%lld\nparams_m=%.3f\ngflops=%.3f\nfps=%.2f\ninput_size=%d\n",
              static_cast<long long>(r.param_count), r.param_count / 1e6, r.gflops, r.fps, r.input_size);
  return 0;
}

struct SynthArgs {
  std::string out = "data/synthetic";
  int count = 200;
  std::int64_t seed = 0;
  int size = 320;
  std::vector<double> ratios = {7.0, 2.0, 1.0};
};

int run_gen_synthetic(const SynthArgs& a) {
  SyntheticOptions options;
  options.image_size = a.size;
  const auto samples = generate_synthetic(a.count, static_cast<std::uint64_t>(a.seed), options);
  const fs::path root = a.out;
  save_dataset(samples, root);
  std::vector<std::string> ids;
  for (const auto& s : samples) {
    ids.push_back(s.id);
  }
  write_split_manifests(root, ids, {a.ratios[0], a.ratios[1], a.ratios[2]}, static_cast<std::uint64_t>(a.seed));
  write_file(root / "classes.txt", "warm\ncool\n");

  TrainConfig cfg;
  cfg.dataset = ".";
  cfg.model.input_size = a.size;
  cfg.seed = static_cast<std::uint64_t>(a.seed);
  cfg.write(root / "train.cfg");
  std::printf("wrote %d images to %s (config: %s)\n", a.count, root.string().c_str(),
              (root / "train.cfg").string().c_str());
  return 0;
}

struct AugmentArgs {
  std::string data;
  std::string out;
  std::int64_t seed = 0;
  int copies = 4;
  std::vector<std::string> ops;
  std::vector<double> ratios = {7.0, 2.0, 1.0};
};

int run_augment(const AugmentArgs& a) {
  AugmentPolicy policy;
  policy.copies = a.copies;
  if (!a.ops.empty()) {
    policy.ops.clear();
    for (const auto& op : a.ops) {
      policy.ops.push_back(parse_augment_op(op));
    }
  }
  std::vector<std::string> warnings;
  LoadOptions load;
  load.warnings = &warnings;
  const auto samples = load_dataset(a.data, load);
  for (const auto& w : warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  const auto expanded = expand_dataset(samples, policy, static_cast<std::uint64_t>(a.seed));
  save_dataset(expanded, a.out);
  std::vector<std::string> ids;
  for (const auto& s : expanded) {
    ids.push_back(s.id);
  }
  write_split_manifests(a.out, ids, {a.ratios[0], a.ratios[1], a.ratios[2]}, static_cast<std::uint64_t>(a.seed));
  if (fs::exists(fs::path(a.data) / "classes.txt")) {
    fs::copy_file(fs::path(a.data) / "classes.txt", fs::path(a.out) / "classes.txt",
                  fs::copy_options::overwrite_existing);
  }
  std::printf("expanded %zu images to %zu under %s\n", samples.size(), expanded.size(), a.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oreyolo: ore detector training and evaluation"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "intra-op threads (0 = library default)");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "train a model from a config file");
  train_cmd->add_option("--config", train_args.config, "training config (key=value)")->required();
  train_cmd->add_option("--out", train_args.out, "output directory");
  train_cmd->add_option("--data", train_args.data, "dataset root (overrides the config)");
  train_cmd->add_option("--seed", train_args.seed, "seed (overrides the config)");
  train_cmd->add_flag("--overfit-one-batch", train_args.overfit, "optimise a single fixed batch");
  train_cmd->add_option("--steps", train_args.steps, "steps for --overfit-one-batch")->check(CLI::PositiveNumber);

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset split");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint)->required();
  eval_cmd->add_option("--config", eval_args.config, "config providing dataset, nms_iou and confidence");
  eval_cmd->add_option("--data", eval_args.data, "dataset root (overrides the config)");
  eval_cmd->add_option("--split", eval_args.split)->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", eval_args.out, "directory for report.txt and metrics.csv");

  PredictArgs predict_args;
  auto* predict_cmd = app.add_subcommand("predict", "annotate images with detections");
  predict_cmd->add_option("--checkpoint", predict_args.checkpoint)->required();
  predict_cmd->add_option("--config", predict_args.config, "config providing nms_iou and confidence");
  predict_cmd->add_option("--out", predict_args.out, "output directory");
  predict_cmd->add_option("--conf", predict_args.confidence, "confidence threshold override");
  predict_cmd->add_option("--iou", predict_args.iou, "NMS IoU override");
  predict_cmd->add_option("--names", predict_args.names_file, "class names file (one per line)");
  predict_cmd->add_option("images", predict_args.images, "image files")->required();

  ProfileArgs profile_args;
  auto* profile_cmd = app.add_subcommand("profile", "parameters, GFLOPs and FPS");
  profile_cmd->add_option("--config", profile_args.config, "config (default: full model at 640)");
  profile_cmd->add_option("--input-size", profile_args.input_size, "override the input side");
  profile_cmd->add_option("--runs", profile_args.runs, "timed inference passes")->check(CLI::NonNegativeNumber);

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand("gen-synthetic", "write a synthetic two-class dataset");
  synth_cmd->add_option("--out", synth_args.out, "dataset root");
  synth_cmd->add_option("--count", synth_args.count)->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth_args.seed);
  synth_cmd->add_option("--size", synth_args.size, "image side in pixels")->check(CLI::Range(32, 4096));
  synth_cmd->add_option("--ratios", synth_args.ratios, "train/val/test ratios")->expected(3);

  AugmentArgs augment_args;
  auto* augment_cmd = app.add_subcommand("augment", "offline expansion with augmented copies");
  augment_cmd->add_option("--data", augment_args.data, "source dataset root")->required();
  augment_cmd->add_option("--out", augment_args.out, "destination root")->required();
  augment_cmd->add_option("--seed", augment_args.seed);
  augment_cmd->add_option("--copies", augment_args.copies)->check(CLI::NonNegativeNumber);
  augment_cmd->add_option("--ops", augment_args.ops, "subset of noise,rotate,crop,translate,reflect,brightness")
      ->delimiter(',');
  augment_cmd->add_option("--ratios", augment_args.ratios, "train/val/test ratios")->expected(3);

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) {
    torch::set_num_threads(threads);
  }

  try {
    if (*train_cmd) return run_train(train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*predict_cmd) return run_predict(predict_args);
    if (*profile_cmd) return run_profile(profile_args);
    if (*synth_cmd) return run_gen_synthetic(synth_args);
    if (*augment_cmd) return run_augment(augment_args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
