#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fusebox/detections.hpp"
#include "fusebox/geometry.hpp"

namespace fusebox {

// Image sizes behind a resize. Boxes then map as x * target / source, which keeps
// integer corners exact where a rounded factor such as 7/6 would not.
struct ResizeFrame {
  double source_width = 0.0;
  double source_height = 0.0;
  double target_width = 0.0;
  double target_height = 0.0;
};

// One test-time augmentation: a resize (geometric) plus an HSV adjustment
// (photometric). Only the geometric part affects box coordinates.
struct TransformSpec {
  double scale_x = 1.0;  // target_width / source_width
  double scale_y = 1.0;
  double hue_shift = 0.0;  // degrees, [-180, 180]
  double saturation_gain = 1.0;
  double value_gain = 1.0;
  // Optional exact form of scale_x/scale_y; must agree with them.
  std::optional<ResizeFrame> frame;

  void validate() const;
  bool geometric_identity() const noexcept { return scale_x == 1.0 && scale_y == 1.0; }
  bool photometric_identity() const noexcept {
    return hue_shift == 0.0 && saturation_gain == 1.0 && value_gain == 1.0;
  }
  bool identity() const noexcept { return geometric_identity() && photometric_identity(); }

  // Pure resize from one image size to another, with the frame recorded.
  static TransformSpec resize(double from_width, double from_height, double to_width, double to_height);
};

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct Hsv {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

// 8-bit RGB raster, row-major, interleaved.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(std::size_t width, std::size_t height);
  // Throws ValidationError unless pixels.size() == width * height * 3.
  RasterImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  const std::vector<std::uint8_t>& pixels() const noexcept { return pixels_; }

  Rgb at(std::size_t x, std::size_t y) const noexcept;
  void set(std::size_t x, std::size_t y, Rgb c) noexcept;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

BBox forward_box(const BBox& box, const TransformSpec& spec) noexcept;
BBox inverse_box(const BBox& box, const TransformSpec& spec) noexcept;

// Maps predictions made on transformed images back to source coordinates.
PredictionSet map_predictions(const PredictionSet& set, const TransformSpec& spec);

Hsv rgb_to_hsv(Rgb pixel) noexcept;
// Round-half-up quantization to 8 bits.
Rgb hsv_to_rgb(const Hsv& hsv) noexcept;

RasterImage adjust_hsv(const RasterImage& img, const TransformSpec& spec);

// Bilinear, half-pixel centres, edge clamped. Output is
// round(width * scale_x) x round(height * scale_y); throws ValidationError if
// either dimension would be zero.
RasterImage resize_image(const RasterImage& img, const TransformSpec& spec);

// resize_image followed by adjust_hsv.
RasterImage apply_transform(const RasterImage& img, const TransformSpec& spec);

}  // namespace fusebox
