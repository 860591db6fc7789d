#include "logodet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <set>

#include "logodet/error.hpp"

namespace logodet {

std::vector<uint8_t> match_detections(const std::vector<Detection>& dets,
                                      const std::vector<BoundingBox>& gts,
                                      double iou_threshold) {
  std::vector<size_t> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    const auto& da = dets[a];
    const auto& db = dets[b];
    if (da.score != db.score) return da.score > db.score;
    if (da.box.x_min != db.box.x_min) return da.box.x_min < db.box.x_min;
    if (da.box.y_min != db.box.y_min) return da.box.y_min < db.box.y_min;
    return a < b;
  });

  std::vector<uint8_t> flags(dets.size(), 0);
  std::vector<bool> taken(gts.size(), false);
  for (size_t idx : order) {
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      double v = iou(dets[idx].box, gts[g]);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best >= iou_threshold) {
      taken[static_cast<size_t>(best_gt)] = true;
      flags[idx] = 1;
    }
  }
  return flags;
}

double average_precision(std::vector<ScoredFlag> flags, size_t n_gt, PrInterpolation interp) {
  if (n_gt < 1) throw NoGroundTruth("average_precision: no ground truth");
  // Ties sort FP before TP: a pessimistic, order-independent convention.
  std::sort(flags.begin(), flags.end(), [](const ScoredFlag& a, const ScoredFlag& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tp < b.tp;
  });

  std::vector<double> recall(flags.size()), precision(flags.size());
  size_t tp = 0;
  for (size_t i = 0; i < flags.size(); ++i) {
    tp += flags[i].tp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(n_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (size_t i = flags.size(); i-- > 1;)
    precision[i - 1] = std::max(precision[i - 1], precision[i]);

  if (interp == PrInterpolation::kElevenPoint) {
    double sum = 0.0;
    for (int k = 0; k <= 10; ++k) {
      double r = k / 10.0;
      double best = 0.0;
      for (size_t i = 0; i < flags.size(); ++i)
        if (recall[i] >= r - 1e-12) {
          best = precision[i];
          break;
        }
      sum += best;
    }
    return sum / 11.0;
  }

  double ap = 0.0, prev_recall = 0.0;
  for (size_t i = 0; i < flags.size(); ++i) {
    ap += (recall[i] - prev_recall) * precision[i];
    prev_recall = recall[i];
  }
  return ap;
}

double mean_ap(const std::vector<double>& per_class_ap) {
  if (per_class_ap.empty()) throw ValidationError("mean_ap: no classes with ground truth");
  double sum = 0.0;
  for (double v : per_class_ap) sum += v;
  return sum / static_cast<double>(per_class_ap.size());
}

DetectionEval evaluate_detections(const DetectionMap& detections, const Dataset& ds,
                                  double iou_threshold, PrInterpolation interp) {
  if (!(iou_threshold > 0 && iou_threshold <= 1))
    throw ValidationError("evaluate_detections: iou threshold must be in (0,1]");
  const int C = ds.brand_map.num_classes();

  // Per class: gather flags image by image, then score-sort globally.
  std::vector<std::vector<ScoredFlag>> flags(static_cast<size_t>(C) + 1);
  std::vector<size_t> n_gt(static_cast<size_t>(C) + 1, 0);
  for (const auto& ann : ds.annotations) {
    std::vector<std::vector<BoundingBox>> gt_by_class(static_cast<size_t>(C) + 1);
    for (const auto& obj : ann.objects) {
      gt_by_class[static_cast<size_t>(obj.cls)].push_back(obj.box);
      ++n_gt[static_cast<size_t>(obj.cls)];
    }
    auto it = detections.find(ann.image_path);
    if (it == detections.end()) continue;
    std::vector<std::vector<Detection>> det_by_class(static_cast<size_t>(C) + 1);
    for (const auto& d : it->second) {
      if (d.cls < 1 || d.cls > C)
        throw ValidationError("evaluate_detections: detection class out of range on " +
                              ann.image_path);
      det_by_class[static_cast<size_t>(d.cls)].push_back(d);
    }
    for (int c = 1; c <= C; ++c) {
      const auto& dets = det_by_class[static_cast<size_t>(c)];
      if (dets.empty()) continue;
      auto tp = match_detections(dets, gt_by_class[static_cast<size_t>(c)], iou_threshold);
      for (size_t i = 0; i < dets.size(); ++i)
        flags[static_cast<size_t>(c)].push_back({dets[i].score, tp[i]});
    }
  }

  DetectionEval result;
  std::vector<double> aps;
  for (int c = 1; c <= C; ++c) {
    ClassApRow row;
    row.cls = c;
    row.name = ds.brand_map.class_names[static_cast<size_t>(c)];
    row.n_gt = n_gt[static_cast<size_t>(c)];
    row.has_gt = row.n_gt > 0;
    if (row.has_gt) {
      row.ap = average_precision(flags[static_cast<size_t>(c)], row.n_gt, interp);
      aps.push_back(row.ap);
    } else {
      std::cerr << "warning: class " << row.name << " has no ground truth; excluded from mAP\n";
    }
    result.per_class.push_back(std::move(row));
  }
  result.map = mean_ap(aps);
  return result;
}

BrandAccuracy brand_accuracy(const std::map<std::string, int>& decisions,
                             const std::map<std::string, int>& labels, int num_brands) {
  if (decisions.size() != labels.size())
    throw LabelMismatch("brand_accuracy: prediction and label image sets differ in size");
  for (const auto& [image, label] : labels) {
    if (!decisions.count(image))
      throw LabelMismatch("brand_accuracy: no prediction for image " + image);
    if (label < 0 || label >= num_brands)
      throw ValidationError("brand_accuracy: label out of range for image " + image);
  }

  BrandAccuracy acc;
  acc.per_brand.assign(static_cast<size_t>(num_brands),
                       std::numeric_limits<double>::quiet_NaN());
  acc.per_brand_total.assign(static_cast<size_t>(num_brands), 0);
  std::vector<size_t> per_brand_correct(static_cast<size_t>(num_brands), 0);
  for (const auto& [image, label] : labels) {
    ++acc.total;
    ++acc.per_brand_total[static_cast<size_t>(label)];
    if (decisions.at(image) == label) {
      ++acc.correct;
      ++per_brand_correct[static_cast<size_t>(label)];
    }
  }
  acc.micro = acc.total ? static_cast<double>(acc.correct) / acc.total : 0.0;
  double macro_sum = 0.0;
  size_t macro_n = 0;
  for (int b = 0; b < num_brands; ++b) {
    if (acc.per_brand_total[static_cast<size_t>(b)] == 0) continue;
    acc.per_brand[static_cast<size_t>(b)] =
        static_cast<double>(per_brand_correct[static_cast<size_t>(b)]) /
        acc.per_brand_total[static_cast<size_t>(b)];
    macro_sum += acc.per_brand[static_cast<size_t>(b)];
    ++macro_n;
  }
  acc.macro = macro_n ? macro_sum / static_cast<double>(macro_n) : 0.0;
  return acc;
}

namespace {

// Tie-corrected Mann-Whitney statistic: mean rank of positives, rescaled.
double rank_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
  std::vector<std::pair<double, int>> all;  // (score, is_positive)
  for (double v : pos) all.push_back({v, 1});
  for (double v : neg) all.push_back({v, 0});
  std::sort(all.begin(), all.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });

  double pos_rank_sum = 0.0;
  size_t i = 0;
  while (i < all.size()) {
    size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (all[k].second) pos_rank_sum += avg_rank;
    i = j;
  }
  double np = static_cast<double>(pos.size()), nn = static_cast<double>(neg.size());
  return (pos_rank_sum - np * (np + 1) / 2.0) / (np * nn);
}

}  // namespace

double brand_auc(const std::map<std::string, std::vector<double>>& scores,
                 const std::map<std::string, int>& labels, int num_brands) {
  if (scores.size() != labels.size())
    throw LabelMismatch("brand_auc: score and label image sets differ in size");
  std::set<int> present;
  for (const auto& [image, label] : labels) {
    if (!scores.count(image)) throw LabelMismatch("brand_auc: no scores for image " + image);
    present.insert(label);
  }
  if (present.size() < 2)
    throw ValidationError("brand_auc: need at least 2 brands present in labels");

  double sum = 0.0;
  size_t n = 0;
  for (int b = 0; b < num_brands; ++b) {
    std::vector<double> pos, neg;
    for (const auto& [image, label] : labels) {
      const auto& vec = scores.at(image);
      if (static_cast<size_t>(b) >= vec.size())
        throw ValidationError("brand_auc: score vector too short for image " + image);
      (label == b ? pos : neg).push_back(vec[static_cast<size_t>(b)]);
    }
    if (pos.empty() || neg.empty()) {
      std::cerr << "warning: brand id " << b << " lacks positives or negatives; skipped\n";
      continue;
    }
    sum += rank_auc(pos, neg);
    ++n;
  }
  if (n == 0) throw DegenerateClass("brand_auc: no brand has both positives and negatives");
  return sum / static_cast<double>(n);
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void save_class_ap_csv(const std::string& path, const DetectionEval& eval) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write AP csv " + path);
  out << "cls,name,n_gt,ap,in_mean\n";
  for (const auto& row : eval.per_class)
    out << row.cls << "," << row.name << "," << row.n_gt << "," << fixed6(row.ap) << ","
        << (row.has_gt ? 1 : 0) << "\n";
  out << ",mAP,," << fixed6(eval.map) << ",\n";
  if (!out) throw IoError("failed writing AP csv " + path);
}

void save_metrics_csv(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics csv " + path);
  out << "metric,value\n";
  for (const auto& [name, value] : rows) out << name << "," << fixed6(value) << "\n";
  if (!out) throw IoError("failed writing metrics csv " + path);
}

void save_brand_accuracy_csv(const std::string& path, const BrandAccuracy& acc,
                             const BrandMap& map) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write brand accuracy csv " + path);
  out << "brand,images,accuracy\n";
  for (size_t b = 0; b < acc.per_brand.size(); ++b) {
    out << map.brand_names[b] << "," << acc.per_brand_total[b] << ",";
    if (acc.per_brand_total[b] > 0) out << fixed6(acc.per_brand[b]);
    out << "\n";
  }
  out << "micro," << acc.total << "," << fixed6(acc.micro) << "\n";
  out << "macro,," << fixed6(acc.macro) << "\n";
  if (!out) throw IoError("failed writing brand accuracy csv " + path);
}

Image render_overlay(const Image& image, const std::vector<GtObject>& gts,
                     const std::vector<Detection>& dets) {
  Image out = image;
  for (const auto& g : gts) draw_rect(out, g.box, 40, 220, 40);
  for (const auto& d : dets) {
    auto v = static_cast<uint8_t>(std::clamp(120.0 + 135.0 * d.score, 0.0, 255.0));
    draw_rect(out, d.box, v, 30, 30);
  }
  return out;
}

}  // namespace logodet
