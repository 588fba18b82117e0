#include "oreyolo/augment.hpp"

#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>

#include "oreyolo/errors.hpp"

namespace oreyolo {

double uniform(Rng& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(rng() % span);
}

std::string to_string(AugmentOp op) {
  switch (op) {
    case AugmentOp::Noise: return "noise";
    case AugmentOp::Rotate: return "rotate";
    case AugmentOp::Crop: return "crop";
    case AugmentOp::Translate: return "translate";
    case AugmentOp::Reflect: return "reflect";
    case AugmentOp::Brightness: return "brightness";
  }
  return "?";
}

AugmentOp parse_augment_op(const std::string& name) {
  for (auto op : kAllAugmentOps) {
    if (to_string(op) == name) {
      return op;
    }
  }
  throw InvalidConfigError("unknown augmentation op '" + name + "'");
}

void AugmentPolicy::validate() const {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw InvalidConfigError(std::string(what) + " must lie in [0, 1]");
    }
  };
  prob(mosaic_prob, "mosaic_prob");
  prob(mixup_prob, "mixup_prob");
  prob(min_area_ratio, "min_area_ratio");
  if (copies < 0) {
    throw InvalidConfigError("copies must be >= 0");
  }
}

std::vector<BoxLabel> remap_labels(const std::vector<BoxLabel>& labels, cv::Size src,
                                   const AxisMap& m, cv::Size dst, const Box& region,
                                   double min_area_ratio) {
  std::vector<BoxLabel> out;
  for (const auto& l : labels) {
    const Box b = l.to_pixels(src.width, src.height);
    Box mapped{m.sx * b.x1 + m.tx, m.sy * b.y1 + m.ty, m.sx * b.x2 + m.tx, m.sy * b.y2 + m.ty};
    if (mapped.x1 > mapped.x2) std::swap(mapped.x1, mapped.x2);
    if (mapped.y1 > mapped.y2) std::swap(mapped.y1, mapped.y2);
    const double full = mapped.area();
    const Box kept{std::clamp(mapped.x1, region.x1, region.x2), std::clamp(mapped.y1, region.y1, region.y2),
                   std::clamp(mapped.x2, region.x1, region.x2), std::clamp(mapped.y2, region.y1, region.y2)};
    const double area = kept.area();
    if (area <= 0.0 || area < min_area_ratio * full) {
      continue;
    }
    BoxLabel n = BoxLabel::from_pixels(l.class_id, kept, dst.width, dst.height);
    n.cx = std::clamp(n.cx, 0.0, 1.0);
    n.cy = std::clamp(n.cy, 0.0, 1.0);
    n.w = std::min(n.w, 2.0 * std::min(n.cx, 1.0 - n.cx));
    n.h = std::min(n.h, 2.0 * std::min(n.cy, 1.0 - n.cy));
    if (n.w > 0.0 && n.h > 0.0) {
      out.push_back(n);
    }
  }
  return out;
}

std::vector<BoxLabel> remap_labels(const std::vector<BoxLabel>& labels, cv::Size src,
                                   const AxisMap& map, cv::Size dst, double min_area_ratio) {
  return remap_labels(labels, src, map, dst, Box{0.0, 0.0, double(dst.width), double(dst.height)},
                      min_area_ratio);
}

std::vector<BoxLabel> reflect_labels(const std::vector<BoxLabel>& labels, bool horizontal) {
  auto out = labels;
  for (auto& l : out) {
    (horizontal ? l.cx : l.cy) = 1.0 - (horizontal ? l.cx : l.cy);
  }
  return out;
}

std::vector<BoxLabel> rotate90_labels(const std::vector<BoxLabel>& labels, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  auto out = labels;
  for (auto& l : out) {
    for (int i = 0; i < k; ++i) {
      l = BoxLabel{l.class_id, 1.0 - l.cy, l.cx, l.h, l.w};
    }
  }
  return out;
}

DatasetSample reflect(const DatasetSample& s, bool horizontal) {
  DatasetSample out{cv::Mat(), reflect_labels(s.labels, horizontal), s.id};
  cv::flip(s.image, out.image, horizontal ? 1 : 0);
  return out;
}

DatasetSample rotate90(const DatasetSample& s, int quarter_turns) {
  const int k = ((quarter_turns % 4) + 4) % 4;
  DatasetSample out{s.image.clone(), rotate90_labels(s.labels, k), s.id};
  if (k == 1) cv::rotate(s.image, out.image, cv::ROTATE_90_CLOCKWISE);
  if (k == 2) cv::rotate(s.image, out.image, cv::ROTATE_180);
  if (k == 3) cv::rotate(s.image, out.image, cv::ROTATE_90_COUNTERCLOCKWISE);
  return out;
}

DatasetSample crop(const DatasetSample& s, cv::Rect region, double min_area_ratio) {
  region &= cv::Rect(0, 0, s.image.cols, s.image.rows);
  if (region.empty()) {
    throw InvalidConfigError("crop region does not overlap the image");
  }
  const cv::Size size = s.image.size();
  DatasetSample out;
  out.id = s.id;
  cv::resize(s.image(region), out.image, size, 0, 0, cv::INTER_LINEAR);
  const double sx = static_cast<double>(size.width) / region.width;
  const double sy = static_cast<double>(size.height) / region.height;
  out.labels = remap_labels(s.labels, size, AxisMap{sx, sy, -region.x * sx, -region.y * sy}, size,
                            min_area_ratio);
  return out;
}

DatasetSample translate(const DatasetSample& s, int dx, int dy, double min_area_ratio) {
  DatasetSample out;
  out.id = s.id;
  out.image = cv::Mat(s.image.size(), s.image.type(), cv::Scalar::all(114));
  const cv::Rect frame(0, 0, s.image.cols, s.image.rows);
  const cv::Rect dst_rect = (frame + cv::Point(dx, dy)) & frame;
  if (!dst_rect.empty()) {
    s.image(dst_rect - cv::Point(dx, dy)).copyTo(out.image(dst_rect));
  }
  out.labels = remap_labels(s.labels, s.image.size(), AxisMap{1.0, 1.0, double(dx), double(dy)},
                            s.image.size(), min_area_ratio);
  return out;
}

DatasetSample adjust_brightness(const DatasetSample& s, double factor) {
  DatasetSample out{cv::Mat(), s.labels, s.id};
  s.image.convertTo(out.image, -1, factor, 0.0);
  return out;
}

DatasetSample add_noise(const DatasetSample& s, double sigma, std::uint64_t seed) {
  cv::Mat noise(s.image.size(), CV_32FC3);
  cv::RNG rng(seed);
  rng.fill(noise, cv::RNG::NORMAL, 0.0, sigma);
  cv::Mat image;
  s.image.convertTo(image, CV_32FC3);
  image += noise;
  DatasetSample out{cv::Mat(), s.labels, s.id};
  image.convertTo(out.image, CV_8UC3);
  return out;
}

DatasetSample augment(const DatasetSample& s, const AugmentPolicy& policy, Rng& rng) {
  std::vector<AugmentOp> chosen;
  for (auto op : kAllAugmentOps) {
    const bool enabled = std::find(policy.ops.begin(), policy.ops.end(), op) != policy.ops.end();
    if (enabled && uniform(rng, 0.0, 1.0) < 0.5) {
      chosen.push_back(op);
    }
  }
  if (chosen.empty()) {
    if (policy.ops.empty()) {
      return s;
    }
    const auto pick = policy.ops[uniform_int(rng, 0, static_cast<int>(policy.ops.size()) - 1)];
    chosen.push_back(pick);
  }

  DatasetSample out = s;
  for (auto op : kAllAugmentOps) {
    if (std::find(chosen.begin(), chosen.end(), op) == chosen.end()) {
      continue;
    }
    const int w = out.image.cols;
    const int h = out.image.rows;
    switch (op) {
      case AugmentOp::Noise:
        out = add_noise(out, uniform(rng, 2.0, 10.0), rng());
        break;
      case AugmentOp::Rotate:
        out = rotate90(out, uniform_int(rng, 1, 3));
        break;
      case AugmentOp::Crop: {
        const double scale = uniform(rng, 0.6, 1.0);
        const int cw = std::max(1, static_cast<int>(std::lround(w * scale)));
        const int ch = std::max(1, static_cast<int>(std::lround(h * scale)));
        const int x = uniform_int(rng, 0, w - cw);
        const int y = uniform_int(rng, 0, h - ch);
        out = crop(out, cv::Rect(x, y, cw, ch), policy.min_area_ratio);
        break;
      }
      case AugmentOp::Translate: {
        const int dx = static_cast<int>(std::lround(uniform(rng, -0.2, 0.2) * w));
        const int dy = static_cast<int>(std::lround(uniform(rng, -0.2, 0.2) * h));
        out = translate(out, dx, dy, policy.min_area_ratio);
        break;
      }
      case AugmentOp::Reflect:
        out = reflect(out, uniform(rng, 0.0, 1.0) < 0.5);
        break;
      case AugmentOp::Brightness:
        out = adjust_brightness(out, uniform(rng, 0.7, 1.3));
        break;
    }
  }
  return out;
}

std::vector<DatasetSample> expand_dataset(const std::vector<DatasetSample>& samples,
                                          const AugmentPolicy& policy, std::uint64_t seed) {
  policy.validate();
  std::vector<DatasetSample> out = samples;
  Rng rng(seed);
  for (const auto& s : samples) {
    for (int k = 1; k <= policy.copies; ++k) {
      auto copy = augment(s, policy, rng);
      copy.id = s.id + "_aug" + std::to_string(k);
      out.push_back(std::move(copy));
    }
  }
  return out;
}

DatasetSample mosaic_at(std::span<const DatasetSample> samples, int size, cv::Point c,
                        double min_area_ratio) {
  if (samples.size() != 4) {
    throw InvalidConfigError("mosaic needs exactly 4 samples");
  }
  if (size <= 0 || c.x < 0 || c.x > size || c.y < 0 || c.y > size) {
    throw InvalidConfigError("mosaic centre must lie on the canvas");
  }
  DatasetSample out;
  out.id = samples[0].id + "_mosaic";
  out.image = cv::Mat(size, size, CV_8UC3, cv::Scalar::all(114));
  const cv::Size canvas(size, size);

  const std::array<cv::Point, 4> offsets = {cv::Point(c.x - size, c.y - size),
                                            cv::Point(c.x, c.y - size),
                                            cv::Point(c.x - size, c.y), cv::Point(c.x, c.y)};
  const std::array<cv::Rect, 4> quadrants = {
      cv::Rect(0, 0, c.x, c.y), cv::Rect(c.x, 0, size - c.x, c.y),
      cv::Rect(0, c.y, c.x, size - c.y), cv::Rect(c.x, c.y, size - c.x, size - c.y)};

  for (int i = 0; i < 4; ++i) {
    const auto& s = samples[i];
    const cv::Rect& q = quadrants[i];
    if (!q.empty()) {
      cv::Mat tile;
      cv::resize(s.image, tile, canvas, 0, 0, cv::INTER_LINEAR);
      tile(q - offsets[i]).copyTo(out.image(q));
    }
    const double sx = static_cast<double>(size) / s.image.cols;
    const double sy = static_cast<double>(size) / s.image.rows;
    const Box region{double(q.x), double(q.y), double(q.x + q.width), double(q.y + q.height)};
    auto labels = remap_labels(s.labels, s.image.size(),
                               AxisMap{sx, sy, double(offsets[i].x), double(offsets[i].y)}, canvas,
                               region, min_area_ratio);
    out.labels.insert(out.labels.end(), labels.begin(), labels.end());
  }
  return out;
}

DatasetSample mosaic(std::span<const DatasetSample> samples, int size, Rng& rng,
                     double min_area_ratio) {
  const cv::Point centre(uniform_int(rng, size / 4, size - size / 4),
                         uniform_int(rng, size / 4, size - size / 4));
  return mosaic_at(samples, size, centre, min_area_ratio);
}

DatasetSample mixup(const DatasetSample& a, const DatasetSample& b, double lambda) {
  cv::Mat other = b.image;
  if (other.size() != a.image.size()) {
    cv::resize(b.image, other, a.image.size(), 0, 0, cv::INTER_LINEAR);
  }
  DatasetSample out;
  out.id = a.id + "_mixup";
  if (lambda >= 1.0) {
    out.image = a.image.clone();
  } else {
    cv::addWeighted(a.image, lambda, other, 1.0 - lambda, 0.0, out.image);
  }
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

}  // namespace oreyolo
