#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "logodet/labels.hpp"
#include "logodet/postprocess.hpp"

namespace logodet {

struct BrandPrediction {
  std::vector<double> scores;  // one per brand, each in [0,1]
  int decision = -1;           // brand id, or -1 for none
  double decision_score = 0.0;

  bool operator==(const BrandPrediction& o) const = default;
};

enum class BrandAggregation { kMax, kSum };

// Per-brand score from an image's detections. Max mode takes the best
// detection score among the brand's classes; sum mode adds them and clamps
// to 1 so scores stay probabilities-like.
std::vector<double> brand_scores(const std::vector<Detection>& detections, const BrandMap& map,
                                 BrandAggregation agg = BrandAggregation::kMax);

// Argmax brand when its score clears min_score; ties go to the lowest brand
// id. nullopt when nothing clears the bar.
std::optional<int> predict_brand(const std::vector<double>& scores, double min_score);

BrandPrediction make_brand_prediction(const std::vector<Detection>& detections,
                                      const BrandMap& map, double min_score,
                                      BrandAggregation agg = BrandAggregation::kMax);

// CSV: image, decision brand name (empty when none), decision score, then
// the full per-brand score vector. Rows sorted by image path.
void save_brand_csv(const std::string& path,
                    const std::map<std::string, BrandPrediction>& predictions,
                    const BrandMap& map);

}  // namespace logodet
