#pragma once

#include <map>
#include <string>
#include <vector>

#include "logodet/box.hpp"
#include "logodet/network.hpp"

namespace logodet {

// Raw head outputs to thresholded, decoded detections. For every RoI and
// every non-background class with prob >= score_threshold, the per-class
// offsets move the proposal box; boxes are clipped to the image and dropped
// when degenerate after clipping.
std::vector<Detection> decode_detections(const std::vector<BoundingBox>& proposals,
                                         const std::vector<RoiOutput>& outputs,
                                         double score_threshold, double image_w,
                                         double image_h);

// Greedy per-class non-maximum suppression: keep the highest score, suppress
// same-class boxes with IoU >= iou_threshold. Ties are broken by box
// coordinates so the result is deterministic; output is score-sorted.
std::vector<Detection> nms(const std::vector<Detection>& detections, double iou_threshold);

using DetectionMap = std::map<std::string, std::vector<Detection>>;

// JSON lines: {"image": path, "detections": [{"bbox": [x0,y0,x1,y1],
// "cls": c, "score": s}, ...]}.
void save_detections(const std::string& path, const DetectionMap& detections);
DetectionMap load_detections(const std::string& path);

}  // namespace logodet
