#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logodet/box.hpp"

namespace logodet {

// 8-bit RGB image, interleaved row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> data;  // size width*height*3

  Image() = default;
  Image(int w, int h, uint8_t fill = 0)
      : width(w), height(h), data(static_cast<size_t>(w) * h * 3, fill) {}

  uint8_t& at(int x, int y, int c) {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }
  uint8_t at(int x, int y, int c) const {
    return data[(static_cast<size_t>(y) * width + x) * 3 + c];
  }

  void set_pixel(int x, int y, uint8_t r, uint8_t g, uint8_t b) {
    size_t i = (static_cast<size_t>(y) * width + x) * 3;
    data[i] = r;
    data[i + 1] = g;
    data[i + 2] = b;
  }

  bool operator==(const Image& o) const = default;
};

// PNG round trip. read_png converts palette/gray/16-bit/alpha inputs to
// 8-bit RGB. Both throw IoError on failure.
Image read_png(const std::string& path);
void write_png(const Image& img, const std::string& path);

// Bilinear sample at continuous coordinates (pixel centers at x+0.5).
// Coordinates are clamped to the image border.
void sample_bilinear(const Image& img, double x, double y, double rgb_out[3]);

// Crops `roi` and resizes it to out_w x out_h with bilinear sampling.
// The identity mapping (roi == whole image, same size) reproduces the input.
Image warp_region_image(const Image& img, const BoundingBox& roi, int out_w, int out_h);

// 2px rectangle outline, clipped to the image.
void draw_rect(Image& img, const BoundingBox& box, uint8_t r, uint8_t g, uint8_t b);

// Per-pixel colour space conversions used by the proposal stage.
// Channels stay in [0,255].
Image rgb_to_hsv(const Image& img);
Image rgb_to_gray(const Image& img);

}  // namespace logodet
