#include "oreyolo/box.hpp"

#include <algorithm>

namespace oreyolo {

double Box::area() const { return std::max(0.0, width()) * std::max(0.0, height()); }

Box BoxLabel::to_pixels(double image_w, double image_h) const {
  return {(cx - w / 2) * image_w, (cy - h / 2) * image_h, (cx + w / 2) * image_w,
          (cy + h / 2) * image_h};
}

BoxLabel BoxLabel::from_pixels(int class_id, const Box& box, double image_w, double image_h) {
  return {class_id, (box.x1 + box.x2) / 2 / image_w, (box.y1 + box.y2) / 2 / image_h,
          box.width() / image_w, box.height() / image_h};
}

std::ostream& operator<<(std::ostream& os, const Box& b) {
  return os << '[' << b.x1 << ',' << b.y1 << ',' << b.x2 << ',' << b.y2 << ']';
}

double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double h = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Box clip(const Box& b, double w, double h) {
  return {std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h), std::clamp(b.x2, 0.0, w),
          std::clamp(b.y2, 0.0, h)};
}

}  // namespace oreyolo
