#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace logodet {

// Axis-aligned pixel rectangle, half-open: [x_min, x_max) x [y_min, y_max).
// Valid boxes have strictly positive area.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  BoundingBox() = default;
  BoundingBox(double x0, double y0, double x1, double y1)
      : x_min(x0), y_min(y0), x_max(x1), y_max(y1) {}

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x_min + x_max); }
  double center_y() const { return 0.5 * (y_min + y_max); }

  bool valid() const {
    return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
           std::isfinite(y_max) && x_max > x_min && y_max > y_min;
  }

  bool inside_image(double image_w, double image_h) const {
    return x_min >= 0.0 && y_min >= 0.0 && x_max <= image_w && y_max <= image_h;
  }

  bool operator==(const BoundingBox& o) const {
    return x_min == o.x_min && y_min == o.y_min && x_max == o.x_max && y_max == o.y_max;
  }
};

// Intersection over union. Symmetric, in [0,1], 0 when disjoint.
double iou(const BoundingBox& a, const BoundingBox& b);

double intersection_area(const BoundingBox& a, const BoundingBox& b);

// Center offsets normalized by the proposal size plus log scale ratios.
struct RegressionTarget {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double th = 0.0;
};

// Offsets that move `proposal` onto `gt`.
RegressionTarget bbox_encode(const BoundingBox& proposal, const BoundingBox& gt);

// Inverse of bbox_encode, clipped to the image. Returns nullopt when clipping
// collapses the box to zero area; callers drop the detection.
std::optional<BoundingBox> bbox_decode(const BoundingBox& proposal, const RegressionTarget& t,
                                       double image_w, double image_h);

// A scored class-labeled box. cls is never background (0).
struct Detection {
  BoundingBox box;
  int cls = 0;
  double score = 0.0;
};

}  // namespace logodet
