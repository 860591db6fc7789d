#include "logodet/brand.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "logodet/error.hpp"

namespace logodet {

std::vector<double> brand_scores(const std::vector<Detection>& detections, const BrandMap& map,
                                 BrandAggregation agg) {
  std::vector<double> scores(static_cast<size_t>(map.num_brands()), 0.0);
  for (const auto& d : detections) {
    int b = map.brand_of(d.cls);
    auto& s = scores[static_cast<size_t>(b)];
    if (agg == BrandAggregation::kMax)
      s = std::max(s, d.score);
    else
      s = std::min(1.0, s + d.score);
  }
  return scores;
}

std::optional<int> predict_brand(const std::vector<double>& scores, double min_score) {
  if (min_score < 0 || min_score > 1)
    throw ValidationError("predict_brand: min_score must be in [0,1]");
  int best = -1;
  double best_score = 0.0;
  for (size_t b = 0; b < scores.size(); ++b) {
    if (best < 0 || scores[b] > best_score) {
      best = static_cast<int>(b);
      best_score = scores[b];
    }
  }
  if (best < 0 || best_score < min_score) return std::nullopt;
  return best;
}

BrandPrediction make_brand_prediction(const std::vector<Detection>& detections,
                                      const BrandMap& map, double min_score,
                                      BrandAggregation agg) {
  BrandPrediction pred;
  pred.scores = brand_scores(detections, map, agg);
  auto decision = predict_brand(pred.scores, min_score);
  if (decision) {
    pred.decision = *decision;
    pred.decision_score = pred.scores[static_cast<size_t>(*decision)];
  }
  return pred;
}

void save_brand_csv(const std::string& path,
                    const std::map<std::string, BrandPrediction>& predictions,
                    const BrandMap& map) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write brand csv " + path);
  out << "image,decision,decision_score";
  for (const auto& name : map.brand_names) out << ",score_" << name;
  out << "\n";
  char buf[32];
  for (const auto& [image, pred] : predictions) {
    out << image << ",";
    if (pred.decision >= 0) out << map.brand_names[static_cast<size_t>(pred.decision)];
    std::snprintf(buf, sizeof buf, "%.6f", pred.decision_score);
    out << "," << buf;
    for (double s : pred.scores) {
      std::snprintf(buf, sizeof buf, "%.6f", s);
      out << "," << buf;
    }
    out << "\n";
  }
  if (!out) throw IoError("failed writing brand csv " + path);
}

}  // namespace logodet
