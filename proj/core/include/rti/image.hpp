#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace rti {

using Rgb = std::array<double, 3>;

// Row-major, channel-interleaved RGB image with double channels.
class Image {
 public:
  Image() = default;
  Image(int width, int height, double fill = 0.0);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t pixel_count() const noexcept { return static_cast<std::size_t>(width_) * height_; }
  bool empty() const noexcept { return pixel_count() == 0; }

  double& at(int row, int col, int channel) { return data_[index(row, col) + channel]; }
  double at(int row, int col, int channel) const { return data_[index(row, col) + channel]; }

  Rgb pixel(int row, int col) const;
  void set_pixel(int row, int col, const Rgb& rgb);

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_size(const Image& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  Image clamped() const;

 private:
  std::size_t index(int row, int col) const noexcept {
    return (static_cast<std::size_t>(row) * width_ + col) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<double> data_;
};

// 8-bit RGB raster, the on-disk pixel payload of frames and latent planes.
struct ByteImage {
  int width = 0;
  int height = 0;
  std::vector<unsigned char> data;  // row-major RGB

  bool operator==(const ByteImage&) const = default;
};

// PNG I/O. Reading accepts 8-bit gray, RGB or RGBA (alpha dropped); writing is 8-bit RGB.
ByteImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const ByteImage& image);

Image to_image(const ByteImage& bytes);
ByteImage to_bytes(const Image& image);  // clamps to [0,1] and rounds

}  // namespace rti
