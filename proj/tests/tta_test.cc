#include "fusebox/tta.hpp"

#include <random>

#include <gtest/gtest.h>

#include "fusebox/error.hpp"
#include "fusebox/png_io.hpp"

namespace fusebox {
namespace {

const TransformSpec kBigPicture = TransformSpec::resize(1200, 800, 1400, 1000);

TEST(TransformSpec, Validation) {
  TransformSpec s;
  EXPECT_TRUE(s.identity());
  s.scale_x = 0.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = {};
  s.hue_shift = 190.0;
  EXPECT_THROW(s.validate(), ValidationError);
  s = {};
  s.value_gain = -0.1;
  EXPECT_THROW(s.validate(), ValidationError);
  EXPECT_DOUBLE_EQ(kBigPicture.scale_x, 7.0 / 6.0);
  EXPECT_DOUBLE_EQ(kBigPicture.scale_y, 5.0 / 4.0);
}

TEST(BoxMapping, BigPictureExample) {
  const BBox src{120, 80, 360, 280};
  const BBox dst{140, 100, 420, 350};
  EXPECT_EQ(forward_box(src, kBigPicture), dst);
  EXPECT_EQ(inverse_box(dst, kBigPicture), src);
}

TEST(BoxMapping, IdentityAndOrigin) {
  const BBox b{3.25, 4, 8, 9.5};
  EXPECT_EQ(forward_box(b, TransformSpec{}), b);
  EXPECT_EQ(inverse_box(b, TransformSpec{}), b);
  EXPECT_EQ(forward_box(BBox{}, kBigPicture), BBox{});
}

TEST(BoxMapping, PhotometricFieldsDoNotMoveBoxes) {
  TransformSpec s;
  s.hue_shift = 30;
  s.saturation_gain = 0.2;
  s.value_gain = 1.7;
  const BBox b{1, 2, 3, 4};
  EXPECT_EQ(forward_box(b, s), b);
}

TEST(BoxMapping, RoundTripProperty) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> coord(0.0, 5000.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < 5000; ++i) {
    TransformSpec s;
    s.scale_x = scale(rng);
    s.scale_y = scale(rng);
    const double a = coord(rng), b = coord(rng), c = coord(rng), d = coord(rng);
    const BBox box{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    const BBox fwd = forward_box(box, s);
    ASSERT_TRUE(fwd.valid());
    const BBox back = inverse_box(fwd, s);
    ASSERT_NEAR(back.x_min, box.x_min, 1e-9 * std::max(1.0, box.x_min));
    ASSERT_NEAR(back.x_max, box.x_max, 1e-9 * std::max(1.0, box.x_max));
    ASSERT_NEAR(back.y_min, box.y_min, 1e-9 * std::max(1.0, box.y_min));
    ASSERT_NEAR(back.y_max, box.y_max, 1e-9 * std::max(1.0, box.y_max));
  }
}

TEST(BoxMapping, UniformScalePreservesIou) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> coord(0.0, 100.0);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < 2000; ++i) {
    TransformSpec s;
    s.scale_x = s.scale_y = scale(rng);
    auto box = [&] {
      const double a = coord(rng), b = coord(rng), c = coord(rng), d = coord(rng);
      return BBox{std::min(a, b), std::min(c, d), std::max(a, b), std::max(c, d)};
    };
    const BBox p = box(), q = box();
    ASSERT_NEAR(iou(forward_box(p, s), forward_box(q, s)), iou(p, q), 1e-9);
    ASSERT_NEAR(giou(forward_box(p, s), forward_box(q, s)), giou(p, q), 1e-9);
  }
}

TEST(MapPredictions, InverseMapsEveryBox) {
  const std::set<int> cats{1};
  EXPECT_TRUE(map_predictions(PredictionSet("e", cats, {}), kBigPicture).empty());
  const Detection d{ImageId::from_int(4), 1, BBox{140, 100, 420, 350}, 0.7};
  const PredictionSet mapped = map_predictions(PredictionSet("m", cats, {d}), kBigPicture);
  ASSERT_EQ(mapped.size(), 1u);
  EXPECT_EQ(mapped.detections()[0].box, (BBox{120, 80, 360, 280}));
  EXPECT_EQ(mapped.detections()[0].score, 0.7);
  EXPECT_EQ(mapped.detections()[0].image_id, d.image_id);
  EXPECT_EQ(map_predictions(PredictionSet("m", cats, {d}), TransformSpec{}).detections()[0], d);
}

TEST(RgbToHsv, Examples) {
  const Hsv red = rgb_to_hsv({255, 0, 0});
  EXPECT_EQ(red.h, 0.0);
  EXPECT_EQ(red.s, 1.0);
  EXPECT_EQ(red.v, 1.0);
  const Hsv gray = rgb_to_hsv({128, 128, 128});
  EXPECT_EQ(gray.h, 0.0);
  EXPECT_EQ(gray.s, 0.0);
  EXPECT_EQ(gray.v, 128.0 / 255.0);
  const Hsv black = rgb_to_hsv({0, 0, 0});
  EXPECT_EQ(black.h, 0.0);
  EXPECT_EQ(black.s, 0.0);
  EXPECT_EQ(black.v, 0.0);
  EXPECT_NEAR(rgb_to_hsv({0, 255, 0}).h, 120.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv({0, 0, 255}).h, 240.0, 1e-12);
  EXPECT_NEAR(rgb_to_hsv({255, 0, 255}).h, 300.0, 1e-12);
}

TEST(HsvToRgb, RoundTripSampled) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> ch(0, 255);
  for (int i = 0; i < 200000; ++i) {
    const Rgb c{static_cast<std::uint8_t>(ch(rng)), static_cast<std::uint8_t>(ch(rng)),
                static_cast<std::uint8_t>(ch(rng))};
    ASSERT_EQ(hsv_to_rgb(rgb_to_hsv(c)), c);
  }
}

RasterImage Gradient(std::size_t w, std::size_t h) {
  RasterImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      img.set(x, y, {static_cast<std::uint8_t>(x * 37 % 256), static_cast<std::uint8_t>(y * 91 % 256),
                     static_cast<std::uint8_t>((x + y) * 13 % 256)});
  return img;
}

TEST(AdjustHsv, IdentityIsBitExact) {
  const RasterImage img = Gradient(31, 17);
  EXPECT_EQ(adjust_hsv(img, TransformSpec{}), img);
}

TEST(AdjustHsv, ZeroSaturationGivesGray) {
  const RasterImage img = Gradient(16, 16);
  TransformSpec s;
  s.saturation_gain = 0.0;
  const RasterImage out = adjust_hsv(img, s);
  for (std::size_t y = 0; y < 16; ++y) {
    for (std::size_t x = 0; x < 16; ++x) {
      const Rgb in = img.at(x, y);
      const Rgb p = out.at(x, y);
      ASSERT_EQ(p.r, p.g);
      ASSERT_EQ(p.g, p.b);
      ASSERT_EQ(p.r, std::max({in.r, in.g, in.b}));
    }
  }
}

TEST(AdjustHsv, GrayIsSaturationFixedPoint) {
  RasterImage img(1, 1);
  img.set(0, 0, {128, 128, 128});
  TransformSpec s;
  s.saturation_gain = 2.0;
  EXPECT_EQ(adjust_hsv(img, s), img);
}

TEST(AdjustHsv, HueShiftAndValueGain) {
  RasterImage img(1, 1);
  img.set(0, 0, {255, 0, 0});
  TransformSpec s;
  s.hue_shift = 120.0;
  EXPECT_EQ(adjust_hsv(img, s).at(0, 0), (Rgb{0, 255, 0}));
  s = {};
  s.hue_shift = -120.0;
  EXPECT_EQ(adjust_hsv(img, s).at(0, 0), (Rgb{0, 0, 255}));
  s = {};
  s.value_gain = 0.5;
  EXPECT_EQ(adjust_hsv(img, s).at(0, 0), (Rgb{128, 0, 0}));
  s.value_gain = 3.0;
  EXPECT_EQ(adjust_hsv(img, s).at(0, 0), (Rgb{255, 0, 0}));
}

TEST(ResizeImage, IdentityConstantAndDims) {
  const RasterImage img = Gradient(9, 5);
  EXPECT_EQ(resize_image(img, TransformSpec{}), img);

  RasterImage flat(2, 2);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x) flat.set(x, y, {10, 200, 77});
  TransformSpec twice;
  twice.scale_x = twice.scale_y = 2.0;
  const RasterImage big = resize_image(flat, twice);
  ASSERT_EQ(big.width(), 4u);
  ASSERT_EQ(big.height(), 4u);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x) ASSERT_EQ(big.at(x, y), (Rgb{10, 200, 77}));

  const RasterImage frame(1200, 800);
  const RasterImage resized = resize_image(frame, kBigPicture);
  EXPECT_EQ(resized.width(), 1400u);
  EXPECT_EQ(resized.height(), 1000u);
}

TEST(ResizeImage, EmptyOutputIsAnError) {
  TransformSpec tiny;
  tiny.scale_x = 0.1;
  EXPECT_THROW(resize_image(RasterImage(4, 4), tiny), ValidationError);
}

TEST(ResizeImage, HalfPixelDownscaleAveragesPairs) {
  RasterImage img(2, 1);
  img.set(0, 0, {0, 0, 0});
  img.set(1, 0, {100, 50, 201});
  TransformSpec half;
  half.scale_x = 0.5;
  const RasterImage out = resize_image(img, half);
  ASSERT_EQ(out.width(), 1u);
  EXPECT_EQ(out.at(0, 0), (Rgb{50, 25, 101}));  // 100.5 rounds half up
}

TEST(RasterImage, BufferSizeChecked) {
  EXPECT_THROW(RasterImage(2, 2, std::vector<std::uint8_t>(11)), ValidationError);
}

TEST(Png, EncodeDecodeRoundTrip) {
  const RasterImage img = Gradient(23, 11);
  const auto bytes = encode_png(img);
  EXPECT_EQ(decode_png(bytes), img);
  const std::vector<std::uint8_t> junk{1, 2, 3, 4};
  EXPECT_THROW(decode_png(junk), ParseError);
}

}  // namespace
}  // namespace fusebox
