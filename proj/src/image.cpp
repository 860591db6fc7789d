#include "logodet/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>

#include "logodet/error.hpp"

namespace logodet {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode PNG " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  Image img(static_cast<int>(w), static_cast<int>(h));
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y)
    rows[y] = img.data.data() + static_cast<size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const Image& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0) throw IoError("refusing to write empty image " + path);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot create " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode PNG " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(img.data.data() +
                                             static_cast<size_t>(y) * img.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void sample_bilinear(const Image& img, double x, double y, double rgb_out[3]) {
  // Convert from continuous coordinates to the pixel-center lattice.
  double fx = x - 0.5;
  double fy = y - 0.5;
  int x0 = static_cast<int>(std::floor(fx));
  int y0 = static_cast<int>(std::floor(fy));
  double ax = fx - x0;
  double ay = fy - y0;

  auto cl = [](int v, int hi) { return std::clamp(v, 0, hi); };
  int x1 = cl(x0 + 1, img.width - 1);
  int y1 = cl(y0 + 1, img.height - 1);
  x0 = cl(x0, img.width - 1);
  y0 = cl(y0, img.height - 1);

  for (int c = 0; c < 3; ++c) {
    double v00 = img.at(x0, y0, c);
    double v10 = img.at(x1, y0, c);
    double v01 = img.at(x0, y1, c);
    double v11 = img.at(x1, y1, c);
    rgb_out[c] = (1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11);
  }
}

Image warp_region_image(const Image& img, const BoundingBox& roi, int out_w, int out_h) {
  Image out(out_w, out_h);
  double sx = roi.width() / out_w;
  double sy = roi.height() / out_h;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      double src_x = roi.x_min + (x + 0.5) * sx;
      double src_y = roi.y_min + (y + 0.5) * sy;
      double rgb[3];
      sample_bilinear(img, src_x, src_y, rgb);
      out.set_pixel(x, y, static_cast<uint8_t>(std::lround(std::clamp(rgb[0], 0.0, 255.0))),
                    static_cast<uint8_t>(std::lround(std::clamp(rgb[1], 0.0, 255.0))),
                    static_cast<uint8_t>(std::lround(std::clamp(rgb[2], 0.0, 255.0))));
    }
  }
  return out;
}

void draw_rect(Image& img, const BoundingBox& box, uint8_t r, uint8_t g, uint8_t b) {
  int x0 = static_cast<int>(std::lround(box.x_min));
  int y0 = static_cast<int>(std::lround(box.y_min));
  int x1 = static_cast<int>(std::lround(box.x_max)) - 1;
  int y1 = static_cast<int>(std::lround(box.y_max)) - 1;
  auto put = [&](int x, int y) {
    if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.set_pixel(x, y, r, g, b);
  };
  for (int t = 0; t < 2; ++t) {
    for (int x = x0; x <= x1; ++x) {
      put(x, y0 + t);
      put(x, y1 - t);
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0 + t, y);
      put(x1 - t, y);
    }
  }
}

Image rgb_to_hsv(const Image& img) {
  Image out(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); i += 3) {
    double r = img.data[i] / 255.0;
    double g = img.data[i + 1] / 255.0;
    double b = img.data[i + 2] / 255.0;
    double mx = std::max({r, g, b});
    double mn = std::min({r, g, b});
    double d = mx - mn;
    double h = 0.0;
    if (d > 0.0) {
      if (mx == r)
        h = std::fmod((g - b) / d, 6.0);
      else if (mx == g)
        h = (b - r) / d + 2.0;
      else
        h = (r - g) / d + 4.0;
      h /= 6.0;
      if (h < 0.0) h += 1.0;
    }
    double s = mx > 0.0 ? d / mx : 0.0;
    out.data[i] = static_cast<uint8_t>(std::lround(h * 255.0));
    out.data[i + 1] = static_cast<uint8_t>(std::lround(s * 255.0));
    out.data[i + 2] = static_cast<uint8_t>(std::lround(mx * 255.0));
  }
  return out;
}

Image rgb_to_gray(const Image& img) {
  Image out(img.width, img.height);
  for (size_t i = 0; i < img.data.size(); i += 3) {
    double y = 0.299 * img.data[i] + 0.587 * img.data[i + 1] + 0.114 * img.data[i + 2];
    uint8_t v = static_cast<uint8_t>(std::lround(std::clamp(y, 0.0, 255.0)));
    out.data[i] = v;
    out.data[i + 1] = v;
    out.data[i + 2] = v;
  }
  return out;
}

}  // namespace logodet
