#include "fusebox/tta.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fusebox/error.hpp"

namespace fusebox {

void TransformSpec::validate() const {
  if (!(std::isfinite(scale_x) && scale_x > 0.0) || !(std::isfinite(scale_y) && scale_y > 0.0)) {
    throw ValidationError("transform scales must be positive and finite");
  }
  if (!(hue_shift >= -180.0 && hue_shift <= 180.0)) {
    throw ValidationError("hue_shift must be in [-180, 180], got " + std::to_string(hue_shift));
  }
  if (!(std::isfinite(saturation_gain) && saturation_gain >= 0.0) ||
      !(std::isfinite(value_gain) && value_gain >= 0.0)) {
    throw ValidationError("saturation_gain and value_gain must be non-negative");
  }
  if (frame) {
    const ResizeFrame& f = *frame;
    for (const double d : {f.source_width, f.source_height, f.target_width, f.target_height}) {
      if (!(std::isfinite(d) && d > 0.0)) {
        throw ValidationError("transform frame sizes must be positive and finite");
      }
    }
    if (scale_x != f.target_width / f.source_width || scale_y != f.target_height / f.source_height) {
      throw ValidationError("transform scale factors disagree with the source/target sizes");
    }
  }
}

TransformSpec TransformSpec::resize(double from_width, double from_height, double to_width,
                                    double to_height) {
  TransformSpec spec;
  spec.scale_x = to_width / from_width;
  spec.scale_y = to_height / from_height;
  spec.frame = ResizeFrame{from_width, from_height, to_width, to_height};
  spec.validate();
  return spec;
}

RasterImage::RasterImage(std::size_t width, std::size_t height)
    : width_(width), height_(height), pixels_(width * height * 3, 0) {}

RasterImage::RasterImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (pixels_.size() != width_ * height_ * 3) {
    throw ValidationError("pixel buffer size does not match " + std::to_string(width_) + "x" +
                          std::to_string(height_) + " RGB");
  }
}

Rgb RasterImage::at(std::size_t x, std::size_t y) const noexcept {
  const std::size_t i = (y * width_ + x) * 3;
  return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RasterImage::set(std::size_t x, std::size_t y, Rgb c) noexcept {
  const std::size_t i = (y * width_ + x) * 3;
  pixels_[i] = c.r;
  pixels_[i + 1] = c.g;
  pixels_[i + 2] = c.b;
}

BBox forward_box(const BBox& box, const TransformSpec& spec) noexcept {
  if (spec.frame) {
    const ResizeFrame& f = *spec.frame;
    return {box.x_min * f.target_width / f.source_width, box.y_min * f.target_height / f.source_height,
            box.x_max * f.target_width / f.source_width, box.y_max * f.target_height / f.source_height};
  }
  return {box.x_min * spec.scale_x, box.y_min * spec.scale_y, box.x_max * spec.scale_x,
          box.y_max * spec.scale_y};
}

BBox inverse_box(const BBox& box, const TransformSpec& spec) noexcept {
  if (spec.frame) {
    const ResizeFrame& f = *spec.frame;
    return {box.x_min * f.source_width / f.target_width, box.y_min * f.source_height / f.target_height,
            box.x_max * f.source_width / f.target_width, box.y_max * f.source_height / f.target_height};
  }
  return {box.x_min / spec.scale_x, box.y_min / spec.scale_y, box.x_max / spec.scale_x,
          box.y_max / spec.scale_y};
}

PredictionSet map_predictions(const PredictionSet& set, const TransformSpec& spec) {
  spec.validate();
  std::vector<Detection> mapped(set.detections().begin(), set.detections().end());
  if (!spec.geometric_identity()) {
    for (Detection& d : mapped) d.box = inverse_box(d.box, spec);
  }
  return PredictionSet(set.source_label(), set.categories(), std::move(mapped));
}

Hsv rgb_to_hsv(Rgb pixel) noexcept {
  const int r = pixel.r;
  const int g = pixel.g;
  const int b = pixel.b;
  const int hi = std::max({r, g, b});
  const int lo = std::min({r, g, b});
  const int chroma = hi - lo;

  Hsv out;
  out.v = hi / 255.0;
  if (hi == 0 || chroma == 0) {
    return out;
  }
  out.s = static_cast<double>(chroma) / hi;

  double h = 0.0;
  if (hi == r) {
    h = static_cast<double>(g - b) / chroma;
  } else if (hi == g) {
    h = 2.0 + static_cast<double>(b - r) / chroma;
  } else {
    h = 4.0 + static_cast<double>(r - g) / chroma;
  }
  h *= 60.0;
  if (h < 0.0) h += 360.0;
  out.h = h >= 360.0 ? 0.0 : h;
  return out;
}

namespace {

std::uint8_t quantize(double unit) noexcept {
  const double x = std::floor(std::clamp(unit, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(std::min(x, 255.0));
}

}  // namespace

Rgb hsv_to_rgb(const Hsv& hsv) noexcept {
  const double v = std::clamp(hsv.v, 0.0, 1.0);
  const double s = std::clamp(hsv.s, 0.0, 1.0);
  if (s == 0.0) {
    const std::uint8_t gray = quantize(v);
    return {gray, gray, gray};
  }
  double h = std::fmod(hsv.h, 360.0);
  if (h < 0.0) h += 360.0;
  const double sector = h / 60.0;
  const int i = static_cast<int>(std::floor(sector)) % 6;
  const double f = sector - std::floor(sector);

  const double p = v * (1.0 - s);
  const double q = v * (1.0 - s * f);
  const double t = v * (1.0 - s * (1.0 - f));

  double r = 0.0, g = 0.0, b = 0.0;
  switch (i) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
  return {quantize(r), quantize(g), quantize(b)};
}

RasterImage adjust_hsv(const RasterImage& img, const TransformSpec& spec) {
  spec.validate();
  if (spec.photometric_identity()) {
    return img;
  }
  RasterImage out(img.width(), img.height());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      Hsv hsv = rgb_to_hsv(img.at(x, y));
      hsv.h = std::fmod(hsv.h + spec.hue_shift + 360.0, 360.0);
      hsv.s = std::clamp(hsv.s * spec.saturation_gain, 0.0, 1.0);
      hsv.v = std::clamp(hsv.v * spec.value_gain, 0.0, 1.0);
      out.set(x, y, hsv_to_rgb(hsv));
    }
  }
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

// Source sample positions for each destination index along one axis.
std::vector<Tap> taps(std::size_t src, std::size_t dst, double scale) {
  std::vector<Tap> out(dst);
  const double last = static_cast<double>(src - 1);
  for (std::size_t i = 0; i < dst; ++i) {
    const double pos = std::clamp((static_cast<double>(i) + 0.5) / scale - 0.5, 0.0, last);
    const double base = std::floor(pos);
    const auto lo = static_cast<std::size_t>(base);
    out[i] = {lo, std::min(lo + 1, src - 1), pos - base};
  }
  return out;
}

}  // namespace

RasterImage resize_image(const RasterImage& img, const TransformSpec& spec) {
  spec.validate();
  const double w = std::round(static_cast<double>(img.width()) * spec.scale_x);
  const double h = std::round(static_cast<double>(img.height()) * spec.scale_y);
  if (w < 1.0 || h < 1.0) {
    throw ValidationError("resize would produce an empty image");
  }
  if (spec.geometric_identity()) {
    return img;
  }
  const auto out_w = static_cast<std::size_t>(w);
  const auto out_h = static_cast<std::size_t>(h);
  const std::vector<Tap> xs = taps(img.width(), out_w, spec.scale_x);
  const std::vector<Tap> ys = taps(img.height(), out_h, spec.scale_y);

  const auto& src = img.pixels();
  const std::size_t stride = img.width() * 3;
  std::vector<std::uint8_t> dst(out_w * out_h * 3);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap& ty = ys[y];
    const std::uint8_t* row0 = src.data() + ty.lo * stride;
    const std::uint8_t* row1 = src.data() + ty.hi * stride;
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = row0[tx.lo * 3 + c] * (1.0 - tx.frac) + row0[tx.hi * 3 + c] * tx.frac;
        const double bottom = row1[tx.lo * 3 + c] * (1.0 - tx.frac) + row1[tx.hi * 3 + c] * tx.frac;
        const double value = top * (1.0 - ty.frac) + bottom * ty.frac;
        dst[(y * out_w + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::floor(value + 0.5), 0.0, 255.0));
      }
    }
  }
  return RasterImage(out_w, out_h, std::move(dst));
}

RasterImage apply_transform(const RasterImage& img, const TransformSpec& spec) {
  return adjust_hsv(resize_image(img, spec), spec);
}

}  // namespace fusebox
