#include <png.h>

#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include "uirepair/dom_snapshot.h"
#include "uirepair/error.h"

namespace uirepair {
namespace {

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorCode::kMalformedImage, path.string() + ": " + what);
}

GrayImage decode_pgm(const std::string& data, const std::filesystem::path& path) {
  std::size_t pos = 2;
  const auto next_number = [&]() -> long {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && std::isdigit(static_cast<unsigned char>(data[pos]))) ++pos;
    if (start == pos) malformed(path, "bad PGM header");
    return std::stol(data.substr(start, pos - start));
  };
  const bool binary = data[1] == '5';
  const long cols = next_number();
  const long rows = next_number();
  const long maxval = next_number();
  if (cols <= 0 || rows <= 0 || maxval <= 0 || maxval > 65535) malformed(path, "bad PGM dimensions");
  const auto n = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  std::vector<double> pixels(n);
  if (binary) {
    ++pos;  // single whitespace after maxval
    const std::size_t bytes_per = maxval > 255 ? 2 : 1;
    if (data.size() < pos + n * bytes_per) malformed(path, "truncated PGM raster");
    for (std::size_t i = 0; i < n; ++i) {
      unsigned v = static_cast<unsigned char>(data[pos + i * bytes_per]);
      if (bytes_per == 2) v = (v << 8) | static_cast<unsigned char>(data[pos + i * 2 + 1]);
      pixels[i] = static_cast<double>(v) / static_cast<double>(maxval);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) pixels[i] = static_cast<double>(next_number()) / static_cast<double>(maxval);
  }
  return GrayImage(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols), std::move(pixels));
}

GrayImage decode_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.c_str(), "rb"), &std::fclose);
  if (!file) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (png == nullptr || info == nullptr) {
    png_destroy_read_struct(&png, &info, nullptr);
    malformed(path, "libpng initialisation failed");
  }
  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> raster;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    malformed(path, "corrupt PNG");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  const png_byte color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  }
  png_read_update_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raster.resize(stride * height);
  row_ptrs.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) row_ptrs[r] = raster.data() + r * stride;
  png_read_image(png, row_ptrs.data());
  png_destroy_read_struct(&png, &info, nullptr);
  if (width == 0 || height == 0) malformed(path, "empty PNG");
  std::vector<double> pixels(static_cast<std::size_t>(width) * height);
  for (png_uint_32 r = 0; r < height; ++r) {
    for (png_uint_32 c = 0; c < width; ++c) pixels[r * width + c] = raster[r * stride + c] / 255.0;
  }
  return GrayImage(height, width, std::move(pixels));
}

}  // namespace

GrayImage load_grayscale_image(const std::filesystem::path& path) {
  const std::string data = read_text_file(path);
  if (data.size() >= 8 && static_cast<unsigned char>(data[0]) == 0x89 && data.compare(1, 3, "PNG") == 0) {
    return decode_png(path);
  }
  if (data.size() >= 2 && data[0] == 'P' && (data[1] == '2' || data[1] == '5')) return decode_pgm(data, path);
  malformed(path, "unsupported image format (expected PNG or PGM)");
}

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  for (double v : image.pixels()) {
    const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
    out += static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0)));
  }
  write_text_file(path, out);
}

}  // namespace uirepair
