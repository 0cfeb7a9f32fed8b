#include "fusebox/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fusebox/error.hpp"

namespace fusebox {

BBox BBox::make(double x_min, double y_min, double x_max, double y_max) {
  BBox b{x_min, y_min, x_max, y_max};
  if (!b.valid()) {
    std::ostringstream msg;
    msg << "invalid box (" << x_min << ", " << y_min << ", " << x_max << ", " << y_max << ")";
    throw ValidationError(msg.str());
  }
  return b;
}

BBox BBox::from_xywh(double x, double y, double width, double height) {
  if (!(width >= 0.0) || !(height >= 0.0)) {
    throw ValidationError("negative width/height");
  }
  return make(x, y, x + width, y + height);
}

bool BBox::valid() const noexcept {
  return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
         std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
}

double area(const BBox& b) noexcept { return b.width() * b.height(); }

std::optional<BBox> intersection(const BBox& a, const BBox& b) noexcept {
  const BBox overlap{std::max(a.x_min, b.x_min), std::max(a.y_min, b.y_min),
                     std::min(a.x_max, b.x_max), std::min(a.y_max, b.y_max)};
  if (overlap.x_min >= overlap.x_max || overlap.y_min >= overlap.y_max) {
    return std::nullopt;
  }
  return overlap;
}

BBox enclosing(const BBox& a, const BBox& b) noexcept {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
          std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

namespace {

struct Overlap {
  double inter;
  double uni;
};

Overlap overlap_areas(const BBox& a, const BBox& b) noexcept {
  const auto inter_box = intersection(a, b);
  const double inter = inter_box ? area(*inter_box) : 0.0;
  return {inter, area(a) + area(b) - inter};
}

}  // namespace

double iou(const BBox& a, const BBox& b) noexcept {
  const auto [inter, uni] = overlap_areas(a, b);
  if (uni <= 0.0) {
    return 0.0;
  }
  return std::clamp(inter / uni, 0.0, 1.0);
}

double giou(const BBox& a, const BBox& b) {
  if (area(a) <= 0.0 && area(b) <= 0.0) {
    throw DegenerateBoxError("giou undefined for two zero-area boxes");
  }
  const auto [inter, uni] = overlap_areas(a, b);
  const double hull = area(enclosing(a, b));
  const double ratio = uni > 0.0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
  // hull >= uni > 0 here, since at least one box has positive area. Rounding can
  // push hull a hair below uni for nested boxes.
  return ratio - std::max(hull - uni, 0.0) / hull;
}

}  // namespace fusebox
