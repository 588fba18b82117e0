#pragma once

#include <ostream>

namespace oreyolo {

/// Axis-aligned box in corner form (x1, y1, x2, y2).
struct Box {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const;  // 0 for degenerate boxes
  bool operator==(const Box&) const = default;
};

/// Ground-truth label: class plus normalised centre/size in [0, 1].
struct BoxLabel {
  int class_id = 0;
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  /// Corner box in pixels for an image of the given size.
  Box to_pixels(double image_w, double image_h) const;
  static BoxLabel from_pixels(int class_id, const Box& box, double image_w, double image_h);
  bool operator==(const BoxLabel&) const = default;
};

struct Detection {
  Box box;  // pixels
  int class_id = 0;
  double confidence = 0.0;
};

std::ostream& operator<<(std::ostream& os, const Box& b);

/// Intersection over union; 0 when either box has no area.
double iou(const Box& a, const Box& b);

/// Intersection area (0 when disjoint).
double intersection_area(const Box& a, const Box& b);

/// Clip to [0, w] x [0, h].
Box clip(const Box& b, double w, double h);

}  // namespace oreyolo
