#include "trc/image.hpp"

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include <png.h>

namespace trc {

namespace {

constexpr index_t kMaxSide = 1 << 20;

struct PngFile {
  FILE* fp = nullptr;
  png_structp png = nullptr;
  png_infop info = nullptr;
  bool writing = false;

  ~PngFile() {
    if (png) {
      if (writing)
        png_destroy_write_struct(&png, &info);
      else
        png_destroy_read_struct(&png, &info, nullptr);
    }
    if (fp) std::fclose(fp);
  }
};

}  // namespace

DenseTensor load_image(const std::string& path) {
  PngFile f;
  f.fp = std::fopen(path.c_str(), "rb");
  if (!f.fp) throw std::runtime_error("load_image: cannot open " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.fp) != 8 || png_sig_cmp(sig, 0, 8))
    throw std::runtime_error("load_image: not a PNG file: " + path);

  f.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!f.png) throw std::runtime_error("load_image: libpng init failed");
  f.info = png_create_info_struct(f.png);
  if (!f.info) throw std::runtime_error("load_image: libpng init failed");

  std::vector<unsigned char> buf;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(f.png)))
    throw std::runtime_error("load_image: libpng failed reading " + path);

  png_init_io(f.png, f.fp);
  png_set_sig_bytes(f.png, 8);
  png_read_info(f.png, f.info);

  const png_uint_32 w = png_get_image_width(f.png, f.info);
  const png_uint_32 h = png_get_image_height(f.png, f.info);
  if (w == 0 || h == 0 || w > kMaxSide || h > kMaxSide)
    throw std::runtime_error("load_image: unreasonable dimensions in " + path);

  png_set_expand(f.png);
  png_set_strip_16(f.png);
  png_set_strip_alpha(f.png);
  png_set_gray_to_rgb(f.png);
  png_read_update_info(f.png, f.info);
  if (png_get_channels(f.png, f.info) != 3)
    throw std::runtime_error("load_image: cannot normalize " + path + " to RGB");

  const size_t rowbytes = png_get_rowbytes(f.png, f.info);
  buf.resize(rowbytes * h);
  rows.resize(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = buf.data() + r * rowbytes;
  png_read_image(f.png, rows.data());
  png_read_end(f.png, nullptr);

  const index_t H = h, W = w;
  DenseTensor t(Shape{H, W, 3});
  for (index_t r = 0; r < H; ++r)
    for (index_t c = 0; c < W; ++c)
      for (index_t k = 0; k < 3; ++k)
        t[r + c * H + k * H * W] =
            static_cast<double>(rows[static_cast<size_t>(r)][3 * c + k]) / 255.0;
  return t;
}

void save_image(const DenseTensor& t, const std::string& path) {
  if (t.order() != 3 || t.shape()[2] != 3)
    throw std::invalid_argument("save_image: expected an H x W x 3 tensor");
  const index_t H = t.shape()[0], W = t.shape()[1];
  if (H == 0 || W == 0 || H > kMaxSide || W > kMaxSide)
    throw std::invalid_argument("save_image: unreasonable dimensions");

  std::vector<unsigned char> buf(static_cast<size_t>(H * W * 3));
  std::vector<png_bytep> rows(static_cast<size_t>(H));
  for (index_t r = 0; r < H; ++r) {
    unsigned char* row = buf.data() + static_cast<size_t>(r * W * 3);
    rows[static_cast<size_t>(r)] = row;
    for (index_t c = 0; c < W; ++c)
      for (index_t k = 0; k < 3; ++k) {
        double v = t[r + c * H + k * H * W];
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        row[3 * c + k] = static_cast<unsigned char>(std::lround(v * 255.0));
      }
  }

  PngFile f;
  f.writing = true;
  f.fp = std::fopen(path.c_str(), "wb");
  if (!f.fp) throw std::runtime_error("save_image: cannot open " + path);
  f.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!f.png) throw std::runtime_error("save_image: libpng init failed");
  f.info = png_create_info_struct(f.png);
  if (!f.info) throw std::runtime_error("save_image: libpng init failed");

  if (setjmp(png_jmpbuf(f.png)))
    throw std::runtime_error("save_image: libpng failed writing " + path);

  png_init_io(f.png, f.fp);
  png_set_IHDR(f.png, f.info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(f.png, f.info);
  png_write_image(f.png, rows.data());
  png_write_end(f.png, nullptr);
}

DenseTensor tensorize(const DenseTensor& t, const Shape& target) {
  if (target.numel() != t.numel())
    throw std::invalid_argument("tensorize: " + t.shape().str() + " has " +
                                std::to_string(t.numel()) + " entries, target " +
                                target.str() + " wants " +
                                std::to_string(target.numel()));
  return reshape(t, target);
}

DenseTensor detensorize(const DenseTensor& t, const Shape& original) {
  return tensorize(t, original);
}

Shape tensorize_preset(const Shape& image_shape) {
  if (image_shape == Shape{256, 256, 3}) return Shape{4, 4, 4, 4, 4, 4, 4, 4, 3};
  if (image_shape == Shape{600, 600, 3}) return Shape{6, 10, 10, 6, 10, 10, 3};
  if (image_shape == Shape{64, 64, 3}) return Shape{4, 4, 4, 4, 4, 4, 3};
  throw std::invalid_argument("tensorize_preset: no preset for " + image_shape.str());
}

}  // namespace trc
