#include "fusebox/png_io.hpp"

#include <png.h>

#include <cstring>
#include <memory>

#include "fusebox/error.hpp"
#include "fusebox/io.hpp"

namespace fusebox {

namespace {

struct ImageGuard {
  png_image* image;
  ~ImageGuard() { png_image_free(image); }
};

}  // namespace

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  ImageGuard guard{&image};

  if (png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()) == 0) {
    throw ParseError(std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr) == 0) {
    throw ParseError(std::string("png: ") + image.message);
  }
  return RasterImage(image.width, image.height, std::move(pixels));
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  ImageGuard guard{&image};

  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels().data(), 0, nullptr) == 0) {
    throw Error(std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels().data(), 0, nullptr) == 0) {
    throw Error(std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

RasterImage read_png(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  try {
    return decode_png({reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()});
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_png(const std::filesystem::path& path, const RasterImage& img) {
  const std::vector<std::uint8_t> bytes = encode_png(img);
  write_file(path, {reinterpret_cast<const char*>(bytes.data()), bytes.size()});
}

}  // namespace fusebox
