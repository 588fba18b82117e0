#include "oreyolo/inference.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>

#include "oreyolo/decode.hpp"
#include "oreyolo/errors.hpp"

namespace oreyolo {

torch::Tensor image_to_tensor(const cv::Mat& bgr, int input_size) {
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    throw DataError("expected a non-empty 8-bit 3-channel image");
  }
  cv::Mat resized;
  if (bgr.rows != input_size || bgr.cols != input_size) {
    cv::resize(bgr, resized, cv::Size(input_size, input_size), 0, 0, cv::INTER_LINEAR);
  } else {
    resized = bgr;
  }
  cv::Mat rgb;
  cv::cvtColor(resized, rgb, cv::COLOR_BGR2RGB);
  auto t = torch::from_blob(rgb.data, {input_size, input_size, 3}, torch::kUInt8);
  return t.permute({2, 0, 1}).to(torch::kFloat32).div_(255.0).contiguous();
}

torch::Tensor batch_images(std::span<const DatasetSample> samples, int input_size) {
  std::vector<torch::Tensor> items;
  items.reserve(samples.size());
  for (const auto& s : samples) {
    items.push_back(image_to_tensor(s.image, input_size));
  }
  return torch::stack(items);
}

namespace {

class EvalModeGuard {
 public:
  explicit EvalModeGuard(OreYolo& model) : model_(model), was_training_(model->is_training()) {
    model_->eval();
  }
  ~EvalModeGuard() { model_->train(was_training_); }
  EvalModeGuard(const EvalModeGuard&) = delete;
  EvalModeGuard& operator=(const EvalModeGuard&) = delete;

 private:
  OreYolo& model_;
  bool was_training_;
};

}  // namespace

std::vector<std::vector<Detection>> detect(OreYolo& model, std::span<const cv::Mat> images,
                                           const DetectOptions& options, int batch_size) {
  EvalModeGuard guard(model);
  torch::NoGradGuard no_grad;
  const auto& cfg = model->config();
  const int size = cfg.input_size;
  std::vector<std::vector<Detection>> out;
  out.reserve(images.size());

  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const std::size_t end = std::min(images.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<torch::Tensor> items;
    for (std::size_t i = start; i < end; ++i) {
      items.push_back(image_to_tensor(images[i], size));
    }
    const auto decoded = decode_raw(model->forward(torch::stack(items)), cfg.anchors, size);
    for (std::size_t i = start; i < end; ++i) {
      auto candidates = candidates_from_decoded(decoded[static_cast<std::int64_t>(i - start)], options.confidence);
      if (candidates.size() > options.max_candidates) {
        std::stable_sort(candidates.begin(), candidates.end(),
                         [](const Detection& a, const Detection& b) { return a.confidence > b.confidence; });
        candidates.resize(options.max_candidates);
      }
      auto kept = nms(candidates, options.nms_iou, options.confidence, options.max_det);
      const double sx = static_cast<double>(images[i].cols) / size;
      const double sy = static_cast<double>(images[i].rows) / size;
      for (auto& d : kept) {
        d.box = clip(Box{d.box.x1 * sx, d.box.y1 * sy, d.box.x2 * sx, d.box.y2 * sy}, images[i].cols,
                     images[i].rows);
      }
      out.push_back(std::move(kept));
    }
  }
  return out;
}

EvalResult evaluate(OreYolo& model, std::span<const DatasetSample> samples, const EvalOptions& options) {
  if (samples.empty()) {
    throw DataError("evaluation split has no images");
  }
  const int nc = model->config().num_classes;
  std::vector<cv::Mat> images;
  std::vector<EvalTruth> truths;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    images.push_back(s.image);
    for (const auto& l : s.labels) {
      if (l.class_id >= nc) {
        throw ConfigError("label class " + std::to_string(l.class_id) + " in sample '" + s.id +
                          "' but the model has " + std::to_string(nc) + " classes");
      }
      truths.push_back({static_cast<int>(i), l.class_id, l.to_pixels(s.image.cols, s.image.rows)});
    }
  }
  DetectOptions detect_options;
  detect_options.confidence = options.eval_confidence;
  detect_options.nms_iou = options.nms_iou;
  detect_options.max_det = options.max_det;
  const auto per_image = detect(model, images, detect_options, options.batch_size);

  std::vector<EvalDetection> dets;
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    for (const auto& d : per_image[i]) {
      dets.push_back({static_cast<int>(i), d});
    }
  }
  return map_range(dets, truths, nc, options.operating_confidence);
}

}  // namespace oreyolo
