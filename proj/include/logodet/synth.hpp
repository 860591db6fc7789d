#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "logodet/dataset.hpp"
#include "logodet/image.hpp"

namespace logodet {

struct SynthesisParams {
  double scale_lo = 0.667;  // ratio applied to the template size
  double scale_hi = 1.333;
  double rotation_max_deg = 12.0;  // sampled in [-max, max]
  double shear_max = 0.15;         // sampled in [-max, max]
  double brightness_jitter = 0.15;  // gain in [1-j, 1+j]
  double color_jitter = 0.10;       // per-channel gain in [1-j, 1+j]
  double occlusion_lo = 0.0;  // overpainted fraction of the logo footprint
  double occlusion_hi = 0.3;
  int objects_min = 1;
  int objects_max = 1;
  uint64_t seed = 1;

  void validate() const;
};

// Placement of one template onto a canvas: points go through
// rotate(rotation) * shear * scale, then the transformed footprint's min
// corner is moved to (tx, ty). Pixel gains apply to the pasted logo only.
struct PasteParams {
  double scale = 1.0;
  double rotation_deg = 0.0;
  double shear = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double brightness = 1.0;
  std::array<double, 3> color_gain{1.0, 1.0, 1.0};
};

// Draws the transformed template onto the canvas (bilinear resample through
// the inverse map) and returns the analytic axis-aligned footprint box,
// clipped to the canvas. With identity placement at (tx, ty) the box is
// (tx, ty, tx + w, ty + h).
BoundingBox paste_logo(Image& canvas, const Image& tpl, const PasteParams& params);

// A deterministic synthetic logo card for a class: brand-keyed hue, a glyph
// keyed to the class, solid border. side x side pixels.
Image make_logo_template(int cls, const BrandMap& map, int side = 96);
std::vector<Image> make_default_templates(const BrandMap& map, int side = 96);

// Muted gradient plus soft clutter rectangles and ellipses; deliberately
// low-saturation so saturated logo cards segment cleanly.
Image make_background(int width, int height, uint64_t seed);
std::vector<Image> make_default_backgrounds(int count, int width, int height, uint64_t seed);

// A brand map with C classes spread round-robin over B brands.
BrandMap make_synthetic_brand_map(int num_classes, int num_brands);

// Generates n_images scenes (1..k single-brand logo instances each, pasted
// with sampled transforms and optional occlusion overpaint), writes PNGs
// under out_dir/images, and returns the dataset (classes.tsv and
// annotations.jsonl are also written to out_dir). Parallel per image; each
// image draws from stream (seed, image index) so any thread count produces
// identical bytes.
Dataset synthesize_dataset(const std::vector<Image>& templates,
                           const std::vector<Image>& backgrounds, const BrandMap& map,
                           const SynthesisParams& params, int n_images,
                           const std::string& out_dir);

}  // namespace logodet
