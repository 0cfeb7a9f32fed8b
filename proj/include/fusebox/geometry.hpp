#pragma once

#include <optional>

namespace fusebox {

// Axis-aligned box in pixel coordinates, corner form.
// Zero-width or zero-height boxes are legal; coordinates must be finite.
struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  // Throws ValidationError when corners are reversed or non-finite.
  static BBox make(double x_min, double y_min, double x_max, double y_max);
  // COCO [x, y, width, height] form.
  static BBox from_xywh(double x, double y, double width, double height);

  double width() const noexcept { return x_max - x_min; }
  double height() const noexcept { return y_max - y_min; }

  bool valid() const noexcept;

  friend bool operator==(const BBox&, const BBox&) = default;
};

double area(const BBox& b) noexcept;

// Overlap rectangle; empty when the boxes are disjoint or only share an edge or corner.
std::optional<BBox> intersection(const BBox& a, const BBox& b) noexcept;

// Smallest box containing both.
BBox enclosing(const BBox& a, const BBox& b) noexcept;

// 0 when the union has zero area.
double iou(const BBox& a, const BBox& b) noexcept;

// Generalized IoU: iou - (|C| - |A u B|) / |C| with C the enclosing box.
// Throws DegenerateBoxError when both boxes have zero area.
double giou(const BBox& a, const BBox& b);

}  // namespace fusebox
