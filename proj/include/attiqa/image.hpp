#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace attiqa {

/// H x W x 3 RGB raster with channel values in [0,1], stored row-major
/// with interleaved channels.
class ImageRaster {
 public:
  static constexpr std::size_t kChannels = 3;
  static constexpr std::size_t kMinSide = 8;

  ImageRaster() = default;
  /// Zero-filled raster. Throws ValidationError if a side is below kMinSide.
  ImageRaster(std::string id, std::size_t height, std::size_t width);
  /// Takes ownership of `pixels` and validates the full invariant.
  ImageRaster(std::string id, std::size_t height, std::size_t width,
              std::vector<double> pixels);

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixel_count() const { return height_ * width_; }
  bool empty() const { return pixels_.empty(); }

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels_[(y * width_ + x) * kChannels + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels_[(y * width_ + x) * kChannels + c];
  }

  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  /// Throws ValidationError unless sizes hold and every value is finite
  /// and within [0,1].
  void validate() const;

  /// Clamps every value into [0,1]; NaN becomes 0.
  void clip();

  bool same_pixels(const ImageRaster& other) const;

 private:
  std::string id_;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> pixels_;
};

/// Rec.601 luma per pixel, row-major.
std::vector<double> luma(const ImageRaster& img);

ImageRaster resize_bilinear(const ImageRaster& img, std::size_t height, std::size_t width);
/// Scales so the shorter side equals `short_side`, preserving aspect ratio
/// (longer side rounded to nearest). Returns a copy when already sized.
ImageRaster resize_short_edge(const ImageRaster& img, std::size_t short_side);
ImageRaster crop(const ImageRaster& img, std::size_t y, std::size_t x,
                 std::size_t height, std::size_t width);
ImageRaster center_crop(const ImageRaster& img, std::size_t side);

/// PNG codec. Reads 8- or 16-bit gray/RGB(A) files; writes 16-bit RGB
/// (or 8-bit when `eight_bit` is set).
ImageRaster load_png(const std::filesystem::path& path, std::string id = {});
void save_png(const ImageRaster& img, const std::filesystem::path& path, bool eight_bit = false);

}  // namespace attiqa
