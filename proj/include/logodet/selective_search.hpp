#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "logodet/box.hpp"
#include "logodet/dataset.hpp"
#include "logodet/image.hpp"
#include "logodet/segmentation.hpp"

namespace logodet {

enum class ColorSpace { kRgb, kHsv, kGray };

std::string color_space_name(ColorSpace cs);
ColorSpace color_space_from_name(const std::string& name);

struct RegionProposal {
  BoundingBox box;
  int rank = 0;  // 0 = first in the ranked list

  bool operator==(const RegionProposal& o) const = default;
};

struct ProposalParams {
  double k = 300.0;    // segmentation threshold
  int min_size = 20;   // smallest initial segment, pixels
  std::vector<ColorSpace> color_spaces{ColorSpace::kHsv};
  int top_k = 2000;
  uint64_t seed = 1;

  void validate() const;
};

// Histograms and geometry backing the pairwise similarity. Histograms are
// L1-normalized: 25 bins per channel for color, 8 orientations x 10
// magnitude bins per channel for texture.
struct RegionFeatures {
  int size = 0;  // pixels
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open pixel bbox
  std::vector<double> color_hist;      // 75 bins
  std::vector<double> texture_hist;    // 240 bins

  BoundingBox box() const {
    return {static_cast<double>(x0), static_cast<double>(y0), static_cast<double>(x1),
            static_cast<double>(y1)};
  }
};

// Sum of color, texture, size, and fill similarities; each term in [0,1] so
// the total is in [0,4]. image_area scales the size and fill terms.
double region_similarity(const RegionFeatures& a, const RegionFeatures& b, int image_area);

// Merge two regions: size-weighted histograms, hull bbox, summed size.
RegionFeatures merge_features(const RegionFeatures& a, const RegionFeatures& b);

// Per-region features for every segment in the map, computed on the given
// (possibly color-converted) image.
std::vector<RegionFeatures> extract_region_features(const Image& image,
                                                    const SegmentationMap& seg);

// Hierarchical similarity-driven merging over the initial segmentation.
// Emits every initial and merged region box, ranked by merge depth (latest
// merges first; ties shuffled by a seeded hash), deduplicated by exact
// integer box, truncated to top_k.
std::vector<RegionProposal> selective_search(const Image& image, const ProposalParams& params);

// Fraction of ground-truth objects covered by at least one proposal with
// IoU >= threshold. Throws EmptyGroundTruth when there are no objects.
using ProposalMapBoxes = std::map<std::string, std::vector<BoundingBox>>;
double proposal_recall(const ProposalMapBoxes& proposals,
                       const std::vector<Annotation>& annotations, double iou_threshold);

// JSON lines: {"image": path, "boxes": [[x0,y0,x1,y1], ...]}.
void save_proposals(const std::string& path, const ProposalMapBoxes& proposals);
ProposalMapBoxes load_proposals(const std::string& path);

}  // namespace logodet
