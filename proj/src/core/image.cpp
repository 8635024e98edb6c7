#include "attiqa/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "attiqa/error.hpp"

namespace attiqa {

namespace {

void check_sides(std::size_t h, std::size_t w) {
  if (h < ImageRaster::kMinSide || w < ImageRaster::kMinSide) {
    throw ValidationError("image must be at least 8x8, got " + std::to_string(h) + "x" +
                          std::to_string(w));
  }
}

}  // namespace

ImageRaster::ImageRaster(std::string id, std::size_t height, std::size_t width)
    : id_(std::move(id)), height_(height), width_(width), pixels_(height * width * kChannels, 0.0) {
  check_sides(height, width);
}

ImageRaster::ImageRaster(std::string id, std::size_t height, std::size_t width,
                         std::vector<double> pixels)
    : id_(std::move(id)), height_(height), width_(width), pixels_(std::move(pixels)) {
  validate();
}

void ImageRaster::validate() const {
  check_sides(height_, width_);
  if (pixels_.size() != height_ * width_ * kChannels) {
    throw ValidationError("pixel buffer size does not match " + std::to_string(height_) + "x" +
                          std::to_string(width_) + "x3");
  }
  for (double v : pixels_) {
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
      throw ValidationError("image '" + id_ + "' has a value outside [0,1]");
    }
  }
}

void ImageRaster::clip() {
  for (double& v : pixels_) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
}

bool ImageRaster::same_pixels(const ImageRaster& other) const {
  return height_ == other.height_ && width_ == other.width_ && pixels_ == other.pixels_;
}

std::vector<double> luma(const ImageRaster& img) {
  std::vector<double> y(img.pixel_count());
  const auto px = img.pixels();
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = 0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2];
  }
  return y;
}

ImageRaster resize_bilinear(const ImageRaster& img, std::size_t height, std::size_t width) {
  if (height == img.height() && width == img.width()) return img;
  ImageRaster out(img.id(), height, width);
  const double sy = static_cast<double>(img.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width()) / static_cast<double>(width);
  const double max_y = static_cast<double>(img.height() - 1);
  const double max_x = static_cast<double>(img.width() - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = img.at(y0, x0, c) * (1 - wx) + img.at(y0, x1, c) * wx;
        const double bot = img.at(y1, x0, c) * (1 - wx) + img.at(y1, x1, c) * wx;
        out.at(y, x, c) = top * (1 - wy) + bot * wy;
      }
    }
  }
  return out;
}

ImageRaster resize_short_edge(const ImageRaster& img, std::size_t short_side) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  std::size_t nh = short_side;
  std::size_t nw = short_side;
  if (h <= w) {
    nw = static_cast<std::size_t>(std::lround(static_cast<double>(w) * short_side / h));
  } else {
    nh = static_cast<std::size_t>(std::lround(static_cast<double>(h) * short_side / w));
  }
  return resize_bilinear(img, nh, nw);
}

ImageRaster crop(const ImageRaster& img, std::size_t y, std::size_t x, std::size_t height,
                 std::size_t width) {
  if (y + height > img.height() || x + width > img.width()) {
    throw ValidationError("crop window exceeds image bounds");
  }
  ImageRaster out(img.id(), height, width);
  for (std::size_t r = 0; r < height; ++r) {
    const auto src = img.pixels().subspan(((y + r) * img.width() + x) * 3, width * 3);
    std::copy(src.begin(), src.end(), out.pixels().begin() + static_cast<std::ptrdiff_t>(r * width * 3));
  }
  return out;
}

ImageRaster center_crop(const ImageRaster& img, std::size_t side) {
  if (side > img.height() || side > img.width()) {
    throw ValidationError("center crop larger than image");
  }
  return crop(img, (img.height() - side) / 2, (img.width() - side) / 2, side, side);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageRaster load_png(const std::filesystem::path& path, std::string id) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + " is not a PNG file");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  std::vector<png_bytep> rows;
  std::vector<png_byte> buffer;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t width = png_get_image_width(png, info);
  const std::size_t height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  buffer.resize(rowbytes * height);
  rows.resize(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (id.empty()) id = path.stem().string();
  ImageRaster img(std::move(id), height, width);
  auto px = img.pixels();
  const std::size_t n = height * width * 3;
  if (depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      const unsigned v = (unsigned(buffer[2 * i]) << 8) | buffer[2 * i + 1];
      px[i] = v / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) px[i] = buffer[i] / 255.0;
  }
  return img;
}

void save_png(const ImageRaster& img, const std::filesystem::path& path, bool eight_bit) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  const std::size_t bytes_per = eight_bit ? 1 : 2;
  std::vector<png_byte> buffer(img.pixel_count() * 3 * bytes_per);
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double v = std::clamp(px[i], 0.0, 1.0);
    if (eight_bit) {
      buffer[i] = static_cast<png_byte>(std::lround(v * 255.0));
    } else {
      const auto q = static_cast<unsigned>(std::lround(v * 65535.0));
      buffer[2 * i] = static_cast<png_byte>(q >> 8);
      buffer[2 * i + 1] = static_cast<png_byte>(q & 0xff);
    }
  }
  std::vector<png_bytep> rows(img.height());
  const std::size_t rowbytes = img.width() * 3 * bytes_per;
  for (std::size_t y = 0; y < img.height(); ++y) rows[y] = buffer.data() + y * rowbytes;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()),
               eight_bit ? 8 : 16, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace attiqa
