#include "oreyolo/annotate.hpp"

#include <opencv2/imgproc.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "oreyolo/errors.hpp"

namespace oreyolo {

std::string format_detections(const std::vector<Detection>& detections) {
  std::string out;
  char buf[160];
  for (const auto& d : detections) {
    std::snprintf(buf, sizeof(buf), "%d %.4f %.4f %.4f %.4f %.4f\n", d.class_id, d.confidence, d.box.x1,
                  d.box.y1, d.box.x2, d.box.y2);
    out += buf;
  }
  return out;
}

std::vector<Detection> parse_detections(const std::string& text, const std::string& source) {
  std::vector<Detection> out;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    std::istringstream fields(line);
    Detection d;
    std::string rest;
    if (!(fields >> d.class_id >> d.confidence >> d.box.x1 >> d.box.y1 >> d.box.x2 >> d.box.y2) ||
        (fields >> rest)) {
      throw DataError(source + ":" + std::to_string(line_no) + ": malformed detection line");
    }
    out.push_back(d);
  }
  return out;
}

cv::Scalar class_color(int class_id) {
  static const std::array<cv::Scalar, 8> palette = {
      cv::Scalar(0, 200, 255), cv::Scalar(255, 128, 0),  cv::Scalar(60, 220, 60),  cv::Scalar(200, 60, 220),
      cv::Scalar(40, 40, 230), cv::Scalar(230, 220, 40), cv::Scalar(128, 128, 255), cv::Scalar(0, 128, 128)};
  return palette[static_cast<std::size_t>(std::abs(class_id)) % palette.size()];
}

cv::Mat annotate(const cv::Mat& image, const std::vector<Detection>& detections,
                 const std::vector<std::string>& class_names) {
  cv::Mat out = image.clone();
  const int thickness = std::max(1, static_cast<int>(std::lround(std::min(image.cols, image.rows) / 300.0)));
  const double font_scale = std::max(0.35, std::min(image.cols, image.rows) / 900.0);
  for (const auto& d : detections) {
    const Box b = clip(d.box, image.cols - 1, image.rows - 1);
    const cv::Point p1(static_cast<int>(std::lround(b.x1)), static_cast<int>(std::lround(b.y1)));
    const cv::Point p2(static_cast<int>(std::lround(b.x2)), static_cast<int>(std::lround(b.y2)));
    const cv::Scalar colour = class_color(d.class_id);
    cv::rectangle(out, p1, p2, colour, thickness, cv::LINE_AA);

    const std::string name = d.class_id >= 0 && static_cast<std::size_t>(d.class_id) < class_names.size()
                                 ? class_names[d.class_id]
                                 : std::to_string(d.class_id);
    char caption[96];
    std::snprintf(caption, sizeof(caption), "%s %.2f", name.c_str(), d.confidence);
    int baseline = 0;
    const cv::Size text = cv::getTextSize(caption, cv::FONT_HERSHEY_SIMPLEX, font_scale, 1, &baseline);
    int ty = p1.y - 2;
    if (ty - text.height < 0) {
      ty = std::min(out.rows - 1, p1.y + text.height + 2);
    }
    const int tx = std::clamp(p1.x, 0, std::max(0, out.cols - text.width));
    const cv::Rect label_rect =
        cv::Rect(tx, ty - text.height - 1, text.width, text.height + baseline) & cv::Rect(0, 0, out.cols, out.rows);
    cv::rectangle(out, label_rect, colour, cv::FILLED);
    cv::putText(out, caption, cv::Point(tx, ty - 1), cv::FONT_HERSHEY_SIMPLEX, font_scale, cv::Scalar(0, 0, 0), 1,
                cv::LINE_AA);
  }
  return out;
}

}  // namespace oreyolo
