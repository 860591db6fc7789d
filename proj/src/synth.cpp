#include "logodet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "logodet/error.hpp"
#include "logodet/parallel.hpp"
#include "logodet/rng.hpp"

namespace logodet {

namespace {

constexpr uint64_t kSynthStreamBase = 1ull << 40;
constexpr double kPi = 3.14159265358979323846;
constexpr double kPlacementMargin = 2.0;  // pixels kept clear of the canvas edge

uint8_t clamp_u8(double v) {
  return static_cast<uint8_t>(std::clamp(std::llround(v), 0ll, 255ll));
}

void hsv_to_rgb(double h, double s, double v, uint8_t rgb[3]) {
  h = h - std::floor(h);
  double c = v * s;
  double hp = h * 6.0;
  double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0.0, g = 0.0, b = 0.0;
  if (hp < 1.0) {
    r = c, g = x;
  } else if (hp < 2.0) {
    r = x, g = c;
  } else if (hp < 3.0) {
    g = c, b = x;
  } else if (hp < 4.0) {
    g = x, b = c;
  } else if (hp < 5.0) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  double m = v - c;
  rgb[0] = clamp_u8((r + m) * 255.0);
  rgb[1] = clamp_u8((g + m) * 255.0);
  rgb[2] = clamp_u8((b + m) * 255.0);
}

// Whether the point (dx, dy) relative to the glyph centre lies inside glyph
// shape `g`. `radius` is the glyph extent in pixels.
bool in_glyph(int g, double dx, double dy, double radius) {
  double r = radius;
  double d = std::hypot(dx, dy);
  switch (g % 8) {
    case 0:  // disc
      return d <= r;
    case 1:  // ring
      return d <= r && d >= 0.55 * r;
    case 2:  // diamond
      return std::fabs(dx) + std::fabs(dy) <= r;
    case 3:  // square
      return std::max(std::fabs(dx), std::fabs(dy)) <= 0.8 * r;
    case 4:  // cross
      return (std::fabs(dx) <= 0.32 * r && std::fabs(dy) <= r) ||
             (std::fabs(dy) <= 0.32 * r && std::fabs(dx) <= r);
    case 5:  // triangle, apex up
      return dy >= -r && dy <= 0.7 * r && std::fabs(dx) <= (dy + r) * 0.62;
    case 6:  // three vertical bars
      return std::fabs(dy) <= 0.9 * r &&
             (std::fabs(dx + 0.66 * r) <= 0.17 * r || std::fabs(dx) <= 0.17 * r ||
              std::fabs(dx - 0.66 * r) <= 0.17 * r);
    default:  // chevron
      return std::fabs(dx) <= r && std::fabs(dy - (0.55 * std::fabs(dx) - 0.3 * r)) <= 0.26 * r;
  }
}

struct Affine {
  double a, b, c, d;  // column-major action: (u,v) -> (a*u + b*v, c*u + d*v)
};

Affine make_linear(const PasteParams& p) {
  double th = p.rotation_deg * kPi / 180.0;
  double co = std::cos(th), si = std::sin(th);
  // rotate * shear * scale with shear matrix [[1, k], [0, 1]].
  return Affine{p.scale * co, p.scale * (co * p.shear - si), p.scale * si,
                p.scale * (si * p.shear + co)};
}

// Axis-aligned extent of the transformed template rectangle [0,w]x[0,h],
// before translation.
void footprint_extent(const Affine& m, double w, double h, double& bw, double& bh,
                      double& mnx, double& mny) {
  double xs[4] = {0.0, m.a * w, m.b * h, m.a * w + m.b * h};
  double ys[4] = {0.0, m.c * w, m.d * h, m.c * w + m.d * h};
  mnx = *std::min_element(xs, xs + 4);
  mny = *std::min_element(ys, ys + 4);
  bw = *std::max_element(xs, xs + 4) - mnx;
  bh = *std::max_element(ys, ys + 4) - mny;
}

void fill_rect(Image& img, double x0, double y0, double x1, double y1, const uint8_t rgb[3]) {
  int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
  int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
  int ix1 = std::min(img.width, static_cast<int>(std::ceil(x1)));
  int iy1 = std::min(img.height, static_cast<int>(std::ceil(y1)));
  for (int y = iy0; y < iy1; ++y)
    for (int x = ix0; x < ix1; ++x) img.set_pixel(x, y, rgb[0], rgb[1], rgb[2]);
}

void blend_pixel(Image& img, int x, int y, const uint8_t rgb[3], double alpha) {
  for (int c = 0; c < 3; ++c) {
    double v = (1.0 - alpha) * img.at(x, y, c) + alpha * rgb[c];
    img.at(x, y, c) = clamp_u8(v);
  }
}

}  // namespace

void SynthesisParams::validate() const {
  if (!(scale_lo > 0.0) || !(scale_hi >= scale_lo))
    throw ValidationError("synthesis: need 0 < scale_lo <= scale_hi");
  if (rotation_max_deg < 0.0 || shear_max < 0.0)
    throw ValidationError("synthesis: rotation and shear ranges must be non-negative");
  if (brightness_jitter < 0.0 || brightness_jitter >= 1.0 || color_jitter < 0.0 ||
      color_jitter >= 1.0)
    throw ValidationError("synthesis: jitter factors must lie in [0, 1)");
  if (occlusion_lo < 0.0 || occlusion_hi < occlusion_lo || occlusion_hi >= 1.0)
    throw ValidationError("synthesis: occlusion fractions must satisfy 0 <= lo <= hi < 1");
  if (objects_min < 1 || objects_max < objects_min)
    throw ValidationError("synthesis: need 1 <= objects_min <= objects_max");
}

BoundingBox paste_logo(Image& canvas, const Image& tpl, const PasteParams& p) {
  if (tpl.width < 1 || tpl.height < 1)
    throw ValidationError("paste_logo: empty template");
  Affine m = make_linear(p);
  double det = m.a * m.d - m.b * m.c;
  if (std::fabs(det) < 1e-12) throw ValidationError("paste_logo: singular transform");

  double bw, bh, mnx, mny;
  footprint_extent(m, tpl.width, tpl.height, bw, bh, mnx, mny);
  // Shift so the footprint's min corner lands exactly at (tx, ty).
  double sx = p.tx - mnx;
  double sy = p.ty - mny;

  double ia = m.d / det, ib = -m.b / det, ic = -m.c / det, id = m.a / det;

  int px0 = std::max(0, static_cast<int>(std::floor(p.tx)));
  int py0 = std::max(0, static_cast<int>(std::floor(p.ty)));
  int px1 = std::min(canvas.width, static_cast<int>(std::ceil(p.tx + bw)));
  int py1 = std::min(canvas.height, static_cast<int>(std::ceil(p.ty + bh)));
  for (int y = py0; y < py1; ++y) {
    for (int x = px0; x < px1; ++x) {
      double cx = x + 0.5 - sx;
      double cy = y + 0.5 - sy;
      double u = ia * cx + ib * cy;
      double v = ic * cx + id * cy;
      if (u < 0.0 || u > tpl.width || v < 0.0 || v > tpl.height) continue;
      double rgb[3];
      sample_bilinear(tpl, u, v, rgb);
      for (int c = 0; c < 3; ++c)
        canvas.at(x, y, c) = clamp_u8(rgb[c] * p.brightness * p.color_gain[c]);
    }
  }

  BoundingBox box{p.tx, p.ty, p.tx + bw, p.ty + bh};
  box.x_min = std::clamp(box.x_min, 0.0, static_cast<double>(canvas.width));
  box.y_min = std::clamp(box.y_min, 0.0, static_cast<double>(canvas.height));
  box.x_max = std::clamp(box.x_max, 0.0, static_cast<double>(canvas.width));
  box.y_max = std::clamp(box.y_max, 0.0, static_cast<double>(canvas.height));
  return box;
}

Image make_logo_template(int cls, const BrandMap& map, int side) {
  if (side < 16) throw ValidationError("make_logo_template: side must be >= 16");
  int brand = map.brand_of(cls);
  int variant = (cls - 1) / std::max(1, map.num_brands());

  // Hue keyed to the brand (golden-ratio spacing keeps brands apart), small
  // shift per class so same-brand logos still differ in colour.
  double hue = std::fmod(0.11 + 0.618033988749895 * brand + 0.043 * variant, 1.0);
  uint8_t card[3], border[3], glyph[3];
  hsv_to_rgb(hue, 0.82, 0.92, card);
  hsv_to_rgb(hue, 0.90, 0.45, border);
  double lum = (0.299 * card[0] + 0.587 * card[1] + 0.114 * card[2]) / 255.0;
  if (lum < 0.55) {
    glyph[0] = glyph[1] = glyph[2] = 245;
  } else {
    glyph[0] = glyph[1] = glyph[2] = 20;
  }

  Image img(side, side);
  int bw = std::max(2, side / 12);
  double cx = side / 2.0, cy = side / 2.0, radius = side * 0.30;
  int g = (cls - 1) % 8;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const uint8_t* px = card;
      if (x < bw || y < bw || x >= side - bw || y >= side - bw)
        px = border;
      else if (in_glyph(g, x + 0.5 - cx, y + 0.5 - cy, radius))
        px = glyph;
      img.set_pixel(x, y, px[0], px[1], px[2]);
    }
  }
  return img;
}

std::vector<Image> make_default_templates(const BrandMap& map, int side) {
  std::vector<Image> out;
  out.reserve(static_cast<size_t>(map.num_classes()));
  for (int c = 1; c <= map.num_classes(); ++c) out.push_back(make_logo_template(c, map, side));
  return out;
}

Image make_background(int width, int height, uint64_t seed) {
  if (width < 8 || height < 8) throw ValidationError("make_background: size must be >= 8x8");
  Rng rng(mix64(seed));

  // Low-saturation linear gradient.
  uint8_t c0[3], c1[3];
  hsv_to_rgb(rng.next_double(), rng.next_in(0.05, 0.22), rng.next_in(0.35, 0.70), c0);
  hsv_to_rgb(rng.next_double(), rng.next_in(0.05, 0.22), rng.next_in(0.35, 0.70), c1);
  double phi = rng.next_in(0.0, kPi);
  double dx = std::cos(phi), dy = std::sin(phi);
  double lo = std::min(0.0, dx * width) + std::min(0.0, dy * height);
  double hi = std::max(0.0, dx * width) + std::max(0.0, dy * height);
  double span = std::max(1e-9, hi - lo);

  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double t = (dx * (x + 0.5) + dy * (y + 0.5) - lo) / span;
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) = clamp_u8((1.0 - t) * c0[c] + t * c1[c]);
    }
  }

  // Soft muted clutter so the proposal stage sees distractor regions.
  int shapes = 3 + static_cast<int>(rng.next_below(6));
  for (int s = 0; s < shapes; ++s) {
    uint8_t col[3];
    hsv_to_rgb(rng.next_double(), rng.next_in(0.05, 0.30), rng.next_in(0.30, 0.75), col);
    double alpha = rng.next_in(0.35, 0.65);
    double scx = rng.next_in(0.0, width);
    double scy = rng.next_in(0.0, height);
    double rx = rng.next_in(width / 16.0, width / 5.0);
    double ry = rng.next_in(height / 16.0, height / 5.0);
    bool ellipse = rng.next_below(2) == 1;
    int x0 = std::max(0, static_cast<int>(std::floor(scx - rx)));
    int x1 = std::min(width, static_cast<int>(std::ceil(scx + rx)));
    int y0 = std::max(0, static_cast<int>(std::floor(scy - ry)));
    int y1 = std::min(height, static_cast<int>(std::ceil(scy + ry)));
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        if (ellipse) {
          double ex = (x + 0.5 - scx) / rx, ey = (y + 0.5 - scy) / ry;
          if (ex * ex + ey * ey > 1.0) continue;
        }
        blend_pixel(img, x, y, col, alpha);
      }
    }
  }
  return img;
}

std::vector<Image> make_default_backgrounds(int count, int width, int height, uint64_t seed) {
  if (count < 1) throw ValidationError("make_default_backgrounds: count must be >= 1");
  std::vector<Image> out(static_cast<size_t>(count));
  parallel_for(static_cast<size_t>(count), [&](size_t i) {
    out[i] = make_background(width, height, mix64(seed) ^ mix64(0xb9c3ull + i));
  });
  return out;
}

BrandMap make_synthetic_brand_map(int num_classes, int num_brands) {
  if (num_classes < 1 || num_brands < 1 || num_brands > num_classes)
    throw ValidationError("make_synthetic_brand_map: need 1 <= num_brands <= num_classes");
  std::vector<std::pair<std::string, std::string>> rows;
  char buf[32];
  for (int c = 0; c < num_classes; ++c) {
    std::snprintf(buf, sizeof(buf), "logo_%02d", c);
    std::string cls = buf;
    std::snprintf(buf, sizeof(buf), "brand_%02d", c % num_brands);
    rows.emplace_back(cls, buf);
  }
  return make_brand_map(rows);
}

Dataset synthesize_dataset(const std::vector<Image>& templates,
                           const std::vector<Image>& backgrounds, const BrandMap& map,
                           const SynthesisParams& params, int n_images,
                           const std::string& out_dir) {
  params.validate();
  map.validate();
  int num_classes = map.num_classes();
  if (static_cast<int>(templates.size()) != num_classes)
    throw ValidationError("synthesize_dataset: need exactly one template per logo class");
  if (backgrounds.empty()) throw ValidationError("synthesize_dataset: no backgrounds");
  if (n_images < 0) throw ValidationError("synthesize_dataset: n_images must be >= 0");

  int min_bw = backgrounds[0].width, min_bh = backgrounds[0].height;
  for (const Image& bg : backgrounds) {
    if (bg.width < 8 || bg.height < 8)
      throw ValidationError("synthesize_dataset: background smaller than 8x8");
    min_bw = std::min(min_bw, bg.width);
    min_bh = std::min(min_bh, bg.height);
  }
  for (int c = 0; c < num_classes; ++c) {
    const Image& t = templates[c];
    if (t.width < 1 || t.height < 1)
      throw ValidationError("synthesize_dataset: empty template for class " +
                            map.class_names[c + 1]);
    if (t.width * params.scale_lo > min_bw - 2.0 * kPlacementMargin ||
        t.height * params.scale_lo > min_bh - 2.0 * kPlacementMargin)
      throw TemplateTooLarge("template for class " + map.class_names[c + 1] +
                             " does not fit the smallest background at minimum scale");
  }

  std::vector<std::vector<int>> brand_classes(static_cast<size_t>(map.num_brands()));
  for (int c = 1; c <= num_classes; ++c)
    brand_classes[static_cast<size_t>(map.class_to_brand[c])].push_back(c);

  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "images", ec);
  if (ec) throw IoError("cannot create " + out_dir + "/images: " + ec.message());

  std::vector<Annotation> annotations(static_cast<size_t>(n_images));
  parallel_for(static_cast<size_t>(n_images), [&](size_t i) {
    Rng rng = stream_rng(params.seed, kSynthStreamBase + i);
    // Class balance: a fixed round-robin primary class; extra objects stay
    // within the same brand so brand labels remain single-valued per image.
    int primary = 1 + static_cast<int>(i) % num_classes;
    const std::vector<int>& pool = brand_classes[static_cast<size_t>(map.class_to_brand[primary])];

    int n_obj = params.objects_min;
    if (params.objects_max > params.objects_min)
      n_obj += static_cast<int>(
          rng.next_below(static_cast<uint64_t>(params.objects_max - params.objects_min) + 1));
    Image canvas = backgrounds[rng.next_below(backgrounds.size())];

    Annotation ann;
    char name[48];
    std::snprintf(name, sizeof(name), "images/img_%05zu.png", i);
    ann.image_path = name;
    ann.width = canvas.width;
    ann.height = canvas.height;

    for (int j = 0; j < n_obj; ++j) {
      int cls = j == 0 ? primary : pool[rng.next_below(pool.size())];
      const Image& tpl = templates[static_cast<size_t>(cls - 1)];

      PasteParams pp;
      pp.rotation_deg = rng.next_in(-params.rotation_max_deg, params.rotation_max_deg);
      pp.shear = rng.next_in(-params.shear_max, params.shear_max);
      // Clamp the scale draw so the rotated footprint always fits.
      Affine unit = make_linear(
          PasteParams{1.0, pp.rotation_deg, pp.shear, 0, 0, 1.0, {1, 1, 1}});
      double fw, fh, mnx, mny;
      footprint_extent(unit, tpl.width, tpl.height, fw, fh, mnx, mny);
      double fit = std::min((canvas.width - 2.0 * kPlacementMargin) / fw,
                            (canvas.height - 2.0 * kPlacementMargin) / fh);
      double s_hi = std::min(params.scale_hi, fit);
      double s_lo = std::min(params.scale_lo, s_hi);
      pp.scale = rng.next_in(s_lo, s_hi);
      pp.brightness = rng.next_in(1.0 - params.brightness_jitter, 1.0 + params.brightness_jitter);
      for (int c = 0; c < 3; ++c)
        pp.color_gain[static_cast<size_t>(c)] =
            rng.next_in(1.0 - params.color_jitter, 1.0 + params.color_jitter);

      double bw = fw * pp.scale, bh = fh * pp.scale;
      double max_tx = std::max(kPlacementMargin, canvas.width - kPlacementMargin - bw);
      double max_ty = std::max(kPlacementMargin, canvas.height - kPlacementMargin - bh);
      // Keep instances mostly separated; accept the last try regardless so
      // the draw count stays bounded and deterministic.
      for (int attempt = 0; attempt < 8; ++attempt) {
        pp.tx = rng.next_in(kPlacementMargin, max_tx);
        pp.ty = rng.next_in(kPlacementMargin, max_ty);
        BoundingBox cand{pp.tx, pp.ty, pp.tx + bw, pp.ty + bh};
        bool clear = true;
        for (const GtObject& prev : ann.objects)
          if (iou(cand, prev.box) >= 0.3) clear = false;
        if (clear) break;
      }
      double occl = rng.next_in(params.occlusion_lo, params.occlusion_hi);

      BoundingBox box = paste_logo(canvas, tpl, pp);

      if (occl > 1e-9) {
        // Overpaint part of the logo; the annotation keeps the full footprint.
        double area = occl * box.area();
        double aspect = rng.next_in(0.5, 2.0);
        double ow = std::min(box.width(), std::sqrt(area * aspect));
        double oh = std::min(box.height(), area / std::max(1e-9, ow));
        double ox = box.x_min + rng.next_double() * (box.width() - ow);
        double oy = box.y_min + rng.next_double() * (box.height() - oh);
        uint8_t col[3];
        hsv_to_rgb(rng.next_double(), rng.next_in(0.05, 0.25), rng.next_in(0.30, 0.70), col);
        fill_rect(canvas, ox, oy, ox + ow, oy + oh, col);
      }

      ann.objects.push_back(GtObject{box, cls});
    }

    write_png(canvas, (fs::path(out_dir) / ann.image_path).string());
    annotations[i] = std::move(ann);
  });

  Dataset ds;
  ds.annotations = std::move(annotations);
  ds.brand_map = map;
  ds.root = out_dir;
  ds.validate();
  save_dataset(ds, out_dir);
  return ds;
}

}  // namespace logodet
