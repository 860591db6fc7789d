#include "logodet/box.hpp"

namespace logodet {

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  return iw * ih;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  return inter / (a.area() + b.area() - inter);
}

RegressionTarget bbox_encode(const BoundingBox& proposal, const BoundingBox& gt) {
  RegressionTarget t;
  t.tx = (gt.center_x() - proposal.center_x()) / proposal.width();
  t.ty = (gt.center_y() - proposal.center_y()) / proposal.height();
  t.tw = std::log(gt.width() / proposal.width());
  t.th = std::log(gt.height() / proposal.height());
  return t;
}

std::optional<BoundingBox> bbox_decode(const BoundingBox& proposal, const RegressionTarget& t,
                                       double image_w, double image_h) {
  double cx = proposal.center_x() + t.tx * proposal.width();
  double cy = proposal.center_y() + t.ty * proposal.height();
  double w = proposal.width() * std::exp(t.tw);
  double h = proposal.height() * std::exp(t.th);

  BoundingBox out(cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h);
  out.x_min = std::clamp(out.x_min, 0.0, image_w);
  out.x_max = std::clamp(out.x_max, 0.0, image_w);
  out.y_min = std::clamp(out.y_min, 0.0, image_h);
  out.y_max = std::clamp(out.y_max, 0.0, image_h);
  if (!out.valid()) return std::nullopt;
  return out;
}

}  // namespace logodet
