#pragma once

#include <vector>

#include "logodet/image.hpp"

namespace logodet {

// Per-pixel region labels, 0..num_regions-1 in first-occurrence (row-major)
// order so equal partitions get equal maps.
struct SegmentationMap {
  int width = 0;
  int height = 0;
  std::vector<int> labels;
  int num_regions = 0;

  int label_at(int x, int y) const { return labels[static_cast<size_t>(y) * width + x]; }
};

// Graph-based segmentation on the 4-connected pixel grid with Euclidean
// color-distance edge weights. A component C merges across an edge of weight
// w when w <= internal(C) + k/|C| for both sides; afterwards components
// smaller than min_size are absorbed into their nearest neighbor. No
// pre-smoothing is applied, so solid shapes segment exactly.
SegmentationMap segment(const Image& image, double k, int min_size);

}  // namespace logodet
