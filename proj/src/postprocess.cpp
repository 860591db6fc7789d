#include "logodet/postprocess.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "logodet/error.hpp"

namespace logodet {

std::vector<Detection> decode_detections(const std::vector<BoundingBox>& proposals,
                                         const std::vector<RoiOutput>& outputs,
                                         double score_threshold, double image_w,
                                         double image_h) {
  if (proposals.size() != outputs.size())
    throw ValidationError("decode_detections: outputs not aligned with proposals");
  std::vector<Detection> out;
  for (size_t i = 0; i < proposals.size(); ++i) {
    const auto& o = outputs[i];
    const int num_classes = static_cast<int>(o.class_probs.size()) - 1;
    for (int c = 1; c <= num_classes; ++c) {
      double score = o.class_probs[static_cast<size_t>(c)];
      if (score < score_threshold) continue;
      size_t base = 4 * (static_cast<size_t>(c) - 1);
      RegressionTarget t{o.offsets[base], o.offsets[base + 1], o.offsets[base + 2],
                         o.offsets[base + 3]};
      auto box = bbox_decode(proposals[i], t, image_w, image_h);
      if (!box) continue;
      out.push_back({*box, c, score});
    }
  }
  return out;
}

namespace {

bool detection_before(const Detection& a, const Detection& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.box.x_min != b.box.x_min) return a.box.x_min < b.box.x_min;
  if (a.box.y_min != b.box.y_min) return a.box.y_min < b.box.y_min;
  if (a.box.x_max != b.box.x_max) return a.box.x_max < b.box.x_max;
  if (a.box.y_max != b.box.y_max) return a.box.y_max < b.box.y_max;
  return a.cls < b.cls;
}

}  // namespace

std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold <= 1))
    throw ValidationError("nms: iou threshold must be in (0,1]");
  std::vector<Detection> sorted = detections;
  std::sort(sorted.begin(), sorted.end(), detection_before);

  std::vector<Detection> kept;
  std::vector<bool> suppressed(sorted.size(), false);
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(sorted[i]);
    for (size_t j = i + 1; j < sorted.size(); ++j) {
      if (suppressed[j] || sorted[j].cls != sorted[i].cls) continue;
      if (iou(sorted[i].box, sorted[j].box) >= iou_threshold) suppressed[j] = true;
    }
  }
  return kept;
}

void save_detections(const std::string& path, const DetectionMap& detections) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write detections file " + path);
  for (const auto& [image, dets] : detections) {
    nlohmann::json j;
    j["image"] = image;
    auto arr = nlohmann::json::array();
    for (const auto& d : dets) {
      nlohmann::json item;
      item["bbox"] = {d.box.x_min, d.box.y_min, d.box.x_max, d.box.y_max};
      item["cls"] = d.cls;
      item["score"] = d.score;
      arr.push_back(item);
    }
    j["detections"] = arr;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing detections file " + path);
}

DetectionMap load_detections(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read detections file " + path);
  DetectionMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("image") || !j.contains("detections"))
      throw ParseError(path + ":" + std::to_string(lineno) + ": missing image/detections");
    std::vector<Detection> dets;
    for (const auto& item : j["detections"]) {
      const auto& b = item.at("bbox");
      if (!b.is_array() || b.size() != 4)
        throw ParseError(path + ":" + std::to_string(lineno) + ": bbox must have 4 numbers");
      dets.push_back({{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                       b[3].get<double>()},
                      item.at("cls").get<int>(),
                      item.at("score").get<double>()});
    }
    out[j["image"].get<std::string>()] = std::move(dets);
  }
  return out;
}

}  // namespace logodet
