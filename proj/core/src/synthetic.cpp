#include "oreyolo/synthetic.hpp"

#include <opencv2/imgproc.hpp>

#include <cmath>
#include <cstdio>

#include "oreyolo/augment.hpp"
#include "oreyolo/errors.hpp"

namespace oreyolo {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

cv::Mat textured_background(int size, Rng& rng) {
  const double base = uniform(rng, 105.0, 150.0);
  cv::Mat coarse(8, 8, CV_32FC1);
  cv::RNG cv_rng(rng());
  cv_rng.fill(coarse, cv::RNG::NORMAL, 0.0, 14.0);
  cv::Mat smooth;
  cv::resize(coarse, smooth, cv::Size(size, size), 0, 0, cv::INTER_CUBIC);
  cv::Mat grain(size, size, CV_32FC1);
  cv_rng.fill(grain, cv::RNG::NORMAL, 0.0, 6.0);
  cv::Mat gray = smooth + grain + base;
  cv::Mat channels[3] = {gray, gray, gray};
  cv::Mat bgr;
  cv::merge(channels, 3, bgr);
  cv::Mat out;
  bgr.convertTo(out, CV_8UC3);
  return out;
}

}  // namespace

SyntheticImage render_synthetic(std::uint64_t seed, const SyntheticOptions& opt) {
  if (opt.image_size < 32 || opt.min_blobs < 1 || opt.max_blobs < opt.min_blobs) {
    throw InvalidConfigError("synthetic options out of range");
  }
  Rng rng(seed);
  const int size = opt.image_size;
  SyntheticImage result;
  result.sample.image = textured_background(size, rng);

  const int wanted = uniform_int(rng, opt.min_blobs, opt.max_blobs);
  std::vector<cv::Rect> placed;
  const int margin = std::max(2, size / 80);
  for (int attempt = 0; static_cast<int>(placed.size()) < wanted && attempt < 400; ++attempt) {
    const double a = uniform(rng, 0.04, 0.12) * size;
    const double b = a * uniform(rng, 0.55, 1.0);
    const double angle = uniform(rng, 0.0, 180.0);
    const cv::Point2d centre(uniform(rng, a + margin, size - a - margin),
                             uniform(rng, a + margin, size - a - margin));
    const int class_id = uniform_int(rng, 0, 1);

    cv::Mat mask = cv::Mat::zeros(size, size, CV_8UC1);
    cv::ellipse(mask, cv::RotatedRect(centre, cv::Size2f(2 * a, 2 * b), angle), cv::Scalar(255), cv::FILLED,
                cv::LINE_8);
    const cv::Rect box = cv::boundingRect(mask);
    if (box.empty()) {
      continue;
    }
    const cv::Rect padded(box.x - margin, box.y - margin, box.width + 2 * margin, box.height + 2 * margin);
    bool clear = true;
    for (const auto& r : placed) {
      if ((r & padded).area() > 0) {
        clear = false;
        break;
      }
    }
    if (!clear) {
      continue;
    }

    cv::Mat paint(size, size, CV_32FC3);
    cv::RNG cv_rng(rng());
    if (class_id == 0) {
      // warm: gold/brass hue with dark and bright speckles
      const cv::Scalar colour(uniform(rng, 20, 70), uniform(rng, 140, 190), uniform(rng, 200, 245));
      paint.setTo(colour);
      cv::Mat speckle(size, size, CV_32FC1);
      cv_rng.fill(speckle, cv::RNG::UNIFORM, 0.0, 1.0);
      cv::Mat dark = speckle < 0.12;
      cv::Mat bright = speckle > 0.92;
      paint.setTo(colour * 0.45, dark);
      paint.setTo(cv::Scalar(200, 240, 255), bright);
    } else {
      // cool: smooth blue-gray with a soft shading gradient
      const cv::Scalar colour(uniform(rng, 170, 225), uniform(rng, 120, 160), uniform(rng, 70, 110));
      for (int y = box.y; y < box.y + box.height; ++y) {
        const double shade = 0.85 + 0.3 * (y - box.y) / std::max(1, box.height - 1);
        paint.row(y).setTo(colour * shade);
      }
    }
    cv::Mat paint8;
    paint.convertTo(paint8, CV_8UC3);
    paint8.copyTo(result.sample.image, mask);

    placed.push_back(box);
    result.masks.push_back(mask);
    const Box px{double(box.x), double(box.y), double(box.x + box.width), double(box.y + box.height)};
    result.sample.labels.push_back(BoxLabel::from_pixels(class_id, px, size, size));
  }
  return result;
}

std::vector<DatasetSample> generate_synthetic(int n, std::uint64_t seed, const SyntheticOptions& options) {
  if (n < 1) {
    throw InvalidConfigError("generate_synthetic needs n >= 1");
  }
  std::vector<DatasetSample> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    auto image = render_synthetic(mix_seed(seed, static_cast<std::uint64_t>(i)), options);
    char id[32];
    std::snprintf(id, sizeof(id), "synth_%05d", i);
    image.sample.id = id;
    out.push_back(std::move(image.sample));
  }
  return out;
}

}  // namespace oreyolo
