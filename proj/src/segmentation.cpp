#include "logodet/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "logodet/error.hpp"

namespace logodet {

namespace {

struct Edge {
  float w;
  int a, b;
};

// Union-find over pixels with per-component size and internal difference.
struct Forest {
  std::vector<int> parent;
  std::vector<int> rank_;
  std::vector<int> size;
  std::vector<float> internal;

  explicit Forest(int n) : parent(n), rank_(n, 0), size(n, 1), internal(n, 0.0f) {
    std::iota(parent.begin(), parent.end(), 0);
  }

  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  int join(int a, int b, float w) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
    internal[a] = w;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }
};

float pixel_distance(const Image& img, int xa, int ya, int xb, int yb) {
  double d = 0.0;
  for (int c = 0; c < 3; ++c) {
    double diff = static_cast<double>(img.at(xa, ya, c)) - static_cast<double>(img.at(xb, yb, c));
    d += diff * diff;
  }
  return static_cast<float>(std::sqrt(d));
}

}  // namespace

SegmentationMap segment(const Image& image, double k, int min_size) {
  if (image.width < 1 || image.height < 1) throw ValidationError("segment: empty image");
  if (!(k > 0)) throw ValidationError("segment: k must be positive");
  if (min_size < 1) throw ValidationError("segment: min_size must be >= 1");

  const int w = image.width, h = image.height;
  const int n = w * h;

  std::vector<Edge> edges;
  edges.reserve(static_cast<size_t>(2 * n));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int idx = y * w + x;
      if (x + 1 < w) edges.push_back({pixel_distance(image, x, y, x + 1, y), idx, idx + 1});
      if (y + 1 < h) edges.push_back({pixel_distance(image, x, y, x, y + 1), idx, idx + w});
    }
  }
  // Ties resolved by pixel order: determinism for equal-weight edges.
  std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) {
    if (l.w != r.w) return l.w < r.w;
    if (l.a != r.a) return l.a < r.a;
    return l.b < r.b;
  });

  Forest forest(n);
  const float kk = static_cast<float>(k);
  for (const auto& e : edges) {
    int a = forest.find(e.a), b = forest.find(e.b);
    if (a == b) continue;
    float ta = forest.internal[a] + kk / static_cast<float>(forest.size[a]);
    float tb = forest.internal[b] + kk / static_cast<float>(forest.size[b]);
    if (e.w <= ta && e.w <= tb) forest.join(a, b, e.w);
  }
  for (const auto& e : edges) {
    int a = forest.find(e.a), b = forest.find(e.b);
    if (a != b && (forest.size[a] < min_size || forest.size[b] < min_size))
      forest.join(a, b, e.w);
  }

  SegmentationMap map;
  map.width = w;
  map.height = h;
  map.labels.assign(static_cast<size_t>(n), -1);
  std::vector<int> remap(static_cast<size_t>(n), -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    int root = forest.find(i);
    if (remap[static_cast<size_t>(root)] < 0) remap[static_cast<size_t>(root)] = next++;
    map.labels[static_cast<size_t>(i)] = remap[static_cast<size_t>(root)];
  }
  map.num_regions = next;
  return map;
}

}  // namespace logodet
