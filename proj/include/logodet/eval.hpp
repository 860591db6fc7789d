#pragma once

#include <map>
#include <string>
#include <vector>

#include "logodet/brand.hpp"
#include "logodet/dataset.hpp"
#include "logodet/postprocess.hpp"

namespace logodet {

// Greedy matching for one class on one image: detections are visited in
// score order (ties by coordinates, then input order); each takes the
// highest-IoU still-unmatched GT when that IoU clears the threshold. Flags
// are returned aligned with the input order.
std::vector<uint8_t> match_detections(const std::vector<Detection>& dets,
                                      const std::vector<BoundingBox>& gts,
                                      double iou_threshold);

struct ScoredFlag {
  double score;
  uint8_t tp;
};

enum class PrInterpolation { kAllPoints, kElevenPoint };

// Area under the monotone precision-recall curve built from the globally
// score-sorted flags. Throws NoGroundTruth when n_gt < 1.
double average_precision(std::vector<ScoredFlag> flags, size_t n_gt,
                         PrInterpolation interp = PrInterpolation::kAllPoints);

// Unweighted mean; rejects an empty list.
double mean_ap(const std::vector<double>& per_class_ap);

struct ClassApRow {
  int cls = 0;
  std::string name;
  size_t n_gt = 0;
  double ap = 0.0;
  bool has_gt = false;
};

struct DetectionEval {
  std::vector<ClassApRow> per_class;  // classes 1..C
  double map = 0.0;                   // mean over classes with GT
};

// Full detection evaluation across a dataset split. Classes without ground
// truth are excluded from the mean and flagged in their row.
DetectionEval evaluate_detections(const DetectionMap& detections, const Dataset& ds,
                                  double iou_threshold,
                                  PrInterpolation interp = PrInterpolation::kAllPoints);

struct BrandAccuracy {
  double micro = 0.0;                  // correct / total
  double macro = 0.0;                  // mean of per-brand accuracies
  std::vector<double> per_brand;       // indexed by brand id; NaN when unseen
  std::vector<size_t> per_brand_total; // labeled images per brand
  size_t total = 0;
  size_t correct = 0;
};

// decisions: image -> predicted brand id (-1 = none). labels: image -> true
// brand id. The two image sets must match exactly.
BrandAccuracy brand_accuracy(const std::map<std::string, int>& decisions,
                             const std::map<std::string, int>& labels, int num_brands);

// Macro one-vs-rest AUC via the tie-corrected rank statistic. Brands without
// positives or negatives are skipped (warning to stderr); throws
// DegenerateClass when no brand is scorable.
double brand_auc(const std::map<std::string, std::vector<double>>& scores,
                 const std::map<std::string, int>& labels, int num_brands);

// CSV writers; all float cells use fixed 6-decimal formatting so identical
// values serialize identically.
void save_class_ap_csv(const std::string& path, const DetectionEval& eval);
void save_metrics_csv(const std::string& path,
                      const std::vector<std::pair<std::string, double>>& rows);
void save_brand_accuracy_csv(const std::string& path, const BrandAccuracy& acc,
                             const BrandMap& map);

// Qualitative inspection overlay: GT boxes in green, detections in red with
// intensity scaled by score.
Image render_overlay(const Image& image, const std::vector<GtObject>& gts,
                     const std::vector<Detection>& dets);

}  // namespace logodet
