#include "rti/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "rti/error.hpp"

namespace rti {

Image::Image(int width, int height, double fill)
    : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height * 3, fill) {
  if (width < 0 || height < 0) {
    throw Error(ErrorCode::InvalidArgument, "negative image size");
  }
}

Rgb Image::pixel(int row, int col) const {
  const std::size_t i = index(row, col);
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set_pixel(int row, int col, const Rgb& rgb) {
  const std::size_t i = index(row, col);
  data_[i] = rgb[0];
  data_[i + 1] = rgb[1];
  data_[i + 2] = rgb[2];
}

Image Image::clamped() const {
  Image out = *this;
  for (double& v : out.data_) v = std::clamp(v, 0.0, 1.0);
  return out;
}

Image to_image(const ByteImage& bytes) {
  Image out(bytes.width, bytes.height);
  auto& d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = bytes.data[i] / 255.0;
  return out;
}

ByteImage to_bytes(const Image& image) {
  ByteImage out{image.width(), image.height(), {}};
  out.data.resize(image.data().size());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    const double v = std::clamp(image.data()[i], 0.0, 1.0);
    out.data[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  return out;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ByteImage read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0) {
    throw Error(ErrorCode::IoError, "not a PNG file: " + path.string());
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  ByteImage out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "corrupt PNG: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
    png_set_gray_to_rgb(png);
  }
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  const std::size_t stride = png_get_rowbytes(png, info);
  if (stride != static_cast<std::size_t>(out.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::IoError, "unsupported PNG layout: " + path.string());
  }
  out.data.resize(stride * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int r = 0; r < out.height; ++r) rows[r] = out.data.data() + stride * r;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const std::filesystem::path& path, const ByteImage& image) {
  if (image.data.size() != static_cast<std::size_t>(image.width) * image.height * 3) {
    throw Error(ErrorCode::ShapeMismatch, "byte buffer does not match image size");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw Error(ErrorCode::IoError, "cannot write " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, "failed writing " + path.string());
  }
  png_init_io(png, file.get());
  // Fixed settings so identical pixels always produce identical bytes.
  png_set_compression_level(png, 6);
  png_set_filter(png, 0, PNG_FILTER_NONE);
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(image.width) * 3;
  for (int r = 0; r < image.height; ++r) {
    png_write_row(png, const_cast<png_bytep>(image.data.data() + stride * r));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace rti
