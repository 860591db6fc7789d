#include "logodet/selective_search.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>

#include <nlohmann/json.hpp>

#include "logodet/error.hpp"
#include "logodet/rng.hpp"

namespace logodet {

std::string color_space_name(ColorSpace cs) {
  switch (cs) {
    case ColorSpace::kRgb: return "rgb";
    case ColorSpace::kHsv: return "hsv";
    case ColorSpace::kGray: return "gray";
  }
  throw ValidationError("unknown color space");
}

ColorSpace color_space_from_name(const std::string& name) {
  if (name == "rgb") return ColorSpace::kRgb;
  if (name == "hsv") return ColorSpace::kHsv;
  if (name == "gray") return ColorSpace::kGray;
  throw ConfigError("unknown color space '" + name + "' (expected rgb, hsv, or gray)");
}

void ProposalParams::validate() const {
  if (!(k > 0)) throw ConfigError("proposals: k must be positive");
  if (min_size < 1) throw ConfigError("proposals: min size must be >= 1");
  if (top_k < 1) throw ConfigError("proposals: top-K must be >= 1");
  if (color_spaces.empty()) throw ConfigError("proposals: need at least one color space");
}

namespace {

constexpr int kColorBins = 25;
constexpr int kOrientBins = 8;
constexpr int kMagBins = 10;

double hist_intersection(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += std::min(a[i], b[i]);
  return s;
}

void l1_normalize(std::vector<double>& h) {
  double s = 0.0;
  for (double v : h) s += v;
  if (s > 0)
    for (double& v : h) v /= s;
}

}  // namespace

double region_similarity(const RegionFeatures& a, const RegionFeatures& b, int image_area) {
  double s_color = hist_intersection(a.color_hist, b.color_hist);
  double s_texture = hist_intersection(a.texture_hist, b.texture_hist);
  double s_size = 1.0 - static_cast<double>(a.size + b.size) / image_area;
  int hx0 = std::min(a.x0, b.x0), hy0 = std::min(a.y0, b.y0);
  int hx1 = std::max(a.x1, b.x1), hy1 = std::max(a.y1, b.y1);
  double hull = static_cast<double>(hx1 - hx0) * (hy1 - hy0);
  double s_fill = 1.0 - (hull - a.size - b.size) / image_area;
  s_fill = std::clamp(s_fill, 0.0, 1.0);
  return s_color + s_texture + s_size + s_fill;
}

RegionFeatures merge_features(const RegionFeatures& a, const RegionFeatures& b) {
  RegionFeatures m;
  m.size = a.size + b.size;
  m.x0 = std::min(a.x0, b.x0);
  m.y0 = std::min(a.y0, b.y0);
  m.x1 = std::max(a.x1, b.x1);
  m.y1 = std::max(a.y1, b.y1);
  const double wa = static_cast<double>(a.size), wb = static_cast<double>(b.size);
  const double inv = 1.0 / (wa + wb);
  m.color_hist.resize(a.color_hist.size());
  for (size_t i = 0; i < m.color_hist.size(); ++i)
    m.color_hist[i] = (a.color_hist[i] * wa + b.color_hist[i] * wb) * inv;
  m.texture_hist.resize(a.texture_hist.size());
  for (size_t i = 0; i < m.texture_hist.size(); ++i)
    m.texture_hist[i] = (a.texture_hist[i] * wa + b.texture_hist[i] * wb) * inv;
  return m;
}

std::vector<RegionFeatures> extract_region_features(const Image& image,
                                                    const SegmentationMap& seg) {
  const int w = image.width, h = image.height;
  std::vector<RegionFeatures> feats(static_cast<size_t>(seg.num_regions));
  for (auto& f : feats) {
    f.x0 = w;
    f.y0 = h;
    f.x1 = 0;
    f.y1 = 0;
    f.color_hist.assign(3 * kColorBins, 0.0);
    f.texture_hist.assign(3 * kOrientBins * kMagBins, 0.0);
  }

  const double mag_norm = 255.0 * std::sqrt(2.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto& f = feats[static_cast<size_t>(seg.label_at(x, y))];
      ++f.size;
      f.x0 = std::min(f.x0, x);
      f.y0 = std::min(f.y0, y);
      f.x1 = std::max(f.x1, x + 1);
      f.y1 = std::max(f.y1, y + 1);
      for (int c = 0; c < 3; ++c) {
        int v = image.at(x, y, c);
        int bin = std::min(kColorBins - 1, v * kColorBins / 256);
        f.color_hist[static_cast<size_t>(c * kColorBins + bin)] += 1.0;

        // Central-difference gradient, border-clamped.
        double dx = 0.5 * (image.at(std::min(x + 1, w - 1), y, c) -
                           image.at(std::max(x - 1, 0), y, c));
        double dy = 0.5 * (image.at(x, std::min(y + 1, h - 1), c) -
                           image.at(x, std::max(y - 1, 0), c));
        double mag = std::sqrt(dx * dx + dy * dy);
        double ang = std::atan2(dy, dx);  // [-pi, pi]
        int obin = std::min(kOrientBins - 1,
                            static_cast<int>((ang + 3.14159265358979323846) /
                                             (2 * 3.14159265358979323846) * kOrientBins));
        int mbin = std::min(kMagBins - 1, static_cast<int>(mag / mag_norm * kMagBins));
        f.texture_hist[static_cast<size_t>((c * kOrientBins + obin) * kMagBins + mbin)] += 1.0;
      }
    }
  }
  for (auto& f : feats) {
    l1_normalize(f.color_hist);
    l1_normalize(f.texture_hist);
  }
  return feats;
}

namespace {

Image convert_space(const Image& img, ColorSpace cs) {
  switch (cs) {
    case ColorSpace::kRgb: return img;
    case ColorSpace::kHsv: return rgb_to_hsv(img);
    case ColorSpace::kGray: return rgb_to_gray(img);
  }
  throw ValidationError("unknown color space");
}

struct PairEntry {
  double sim;
  uint64_t tie;
  int a, b;
};

struct PairOrder {
  bool operator()(const PairEntry& l, const PairEntry& r) const {
    // priority_queue keeps the "largest"; we want highest sim first, then
    // smallest tie key, then ids, for a total deterministic order.
    if (l.sim != r.sim) return l.sim < r.sim;
    if (l.tie != r.tie) return l.tie > r.tie;
    if (l.a != r.a) return l.a > r.a;
    return l.b > r.b;
  }
};

struct HierarchyEntry {
  int x0, y0, x1, y1;
  int depth;  // 0 = initial region, then the merge step that created it
};

uint64_t pair_tie(uint64_t seed, int a, int b) {
  return mix64(seed ^ (static_cast<uint64_t>(static_cast<uint32_t>(a)) << 32 |
                       static_cast<uint64_t>(static_cast<uint32_t>(b))));
}

uint64_t box_tie(uint64_t seed, const HierarchyEntry& e) {
  uint64_t h = mix64(seed ^ 0x626f7865ull);
  h = mix64(h ^ static_cast<uint64_t>(static_cast<uint32_t>(e.x0)));
  h = mix64(h ^ static_cast<uint64_t>(static_cast<uint32_t>(e.y0)));
  h = mix64(h ^ static_cast<uint64_t>(static_cast<uint32_t>(e.x1)));
  h = mix64(h ^ static_cast<uint64_t>(static_cast<uint32_t>(e.y1)));
  return h;
}

// One merging pass over one color-converted image; appends hierarchy boxes.
void search_one_strategy(const Image& converted, const ProposalParams& params,
                         std::vector<HierarchyEntry>& out) {
  SegmentationMap seg = segment(converted, params.k, params.min_size);
  auto feats = extract_region_features(converted, seg);
  const int image_area = converted.width * converted.height;

  for (const auto& f : feats) out.push_back({f.x0, f.y0, f.x1, f.y1, 0});
  if (seg.num_regions < 2) return;

  // Region ids grow past num_regions as merges create new regions.
  std::vector<std::set<int>> neighbors(static_cast<size_t>(seg.num_regions));
  for (int y = 0; y < seg.height; ++y) {
    for (int x = 0; x < seg.width; ++x) {
      int l = seg.label_at(x, y);
      if (x + 1 < seg.width && seg.label_at(x + 1, y) != l) {
        neighbors[static_cast<size_t>(l)].insert(seg.label_at(x + 1, y));
        neighbors[static_cast<size_t>(seg.label_at(x + 1, y))].insert(l);
      }
      if (y + 1 < seg.height && seg.label_at(x, y + 1) != l) {
        neighbors[static_cast<size_t>(l)].insert(seg.label_at(x, y + 1));
        neighbors[static_cast<size_t>(seg.label_at(x, y + 1))].insert(l);
      }
    }
  }

  std::vector<bool> alive(static_cast<size_t>(seg.num_regions), true);
  std::priority_queue<PairEntry, std::vector<PairEntry>, PairOrder> queue;
  for (int a = 0; a < seg.num_regions; ++a)
    for (int b : neighbors[static_cast<size_t>(a)])
      if (a < b)
        queue.push({region_similarity(feats[static_cast<size_t>(a)],
                                      feats[static_cast<size_t>(b)], image_area),
                    pair_tie(params.seed, a, b), a, b});

  int depth = 0;
  while (!queue.empty()) {
    PairEntry top = queue.top();
    queue.pop();
    if (!alive[static_cast<size_t>(top.a)] || !alive[static_cast<size_t>(top.b)]) continue;

    alive[static_cast<size_t>(top.a)] = false;
    alive[static_cast<size_t>(top.b)] = false;
    int id = static_cast<int>(feats.size());
    feats.push_back(merge_features(feats[static_cast<size_t>(top.a)],
                                   feats[static_cast<size_t>(top.b)]));
    alive.push_back(true);
    const auto& nf = feats.back();
    out.push_back({nf.x0, nf.y0, nf.x1, nf.y1, ++depth});

    std::set<int> merged;
    for (int n : neighbors[static_cast<size_t>(top.a)])
      if (alive[static_cast<size_t>(n)]) merged.insert(n);
    for (int n : neighbors[static_cast<size_t>(top.b)])
      if (alive[static_cast<size_t>(n)]) merged.insert(n);
    merged.erase(top.a);
    merged.erase(top.b);
    neighbors.push_back(merged);
    for (int n : merged) {
      neighbors[static_cast<size_t>(n)].insert(id);
      queue.push({region_similarity(feats[static_cast<size_t>(id)],
                                    feats[static_cast<size_t>(n)], image_area),
                  pair_tie(params.seed, std::min(id, n), std::max(id, n)), std::min(id, n),
                  std::max(id, n)});
    }
  }
}

}  // namespace

std::vector<RegionProposal> selective_search(const Image& image, const ProposalParams& params) {
  params.validate();
  if (image.width < 1 || image.height < 1)
    throw ValidationError("selective_search: empty image");

  std::vector<HierarchyEntry> entries;
  for (ColorSpace cs : params.color_spaces)
    search_one_strategy(convert_space(image, cs), params, entries);

  std::stable_sort(entries.begin(), entries.end(),
                   [&](const HierarchyEntry& l, const HierarchyEntry& r) {
                     if (l.depth != r.depth) return l.depth > r.depth;
                     return box_tie(params.seed, l) < box_tie(params.seed, r);
                   });

  std::vector<RegionProposal> out;
  std::set<std::array<int, 4>> seen;
  for (const auto& e : entries) {
    if (static_cast<int>(out.size()) >= params.top_k) break;
    std::array<int, 4> key{e.x0, e.y0, e.x1, e.y1};
    if (!seen.insert(key).second) continue;
    RegionProposal p;
    p.box = {static_cast<double>(e.x0), static_cast<double>(e.y0), static_cast<double>(e.x1),
             static_cast<double>(e.y1)};
    p.rank = static_cast<int>(out.size());
    out.push_back(p);
  }
  return out;
}

double proposal_recall(const ProposalMapBoxes& proposals,
                       const std::vector<Annotation>& annotations, double iou_threshold) {
  if (!(iou_threshold > 0 && iou_threshold <= 1))
    throw ValidationError("proposal_recall: iou threshold must be in (0,1]");
  size_t total = 0, covered = 0;
  for (const auto& ann : annotations) {
    auto it = proposals.find(ann.image_path);
    for (const auto& gt : ann.objects) {
      ++total;
      if (it == proposals.end()) continue;
      for (const auto& box : it->second) {
        if (iou(box, gt.box) >= iou_threshold) {
          ++covered;
          break;
        }
      }
    }
  }
  if (total == 0) throw EmptyGroundTruth("proposal_recall: no ground-truth objects");
  return static_cast<double>(covered) / static_cast<double>(total);
}

void save_proposals(const std::string& path, const ProposalMapBoxes& proposals) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write proposals file " + path);
  for (const auto& [image, boxes] : proposals) {
    nlohmann::json j;
    j["image"] = image;
    auto arr = nlohmann::json::array();
    for (const auto& b : boxes)
      arr.push_back({static_cast<long long>(std::llround(b.x_min)),
                     static_cast<long long>(std::llround(b.y_min)),
                     static_cast<long long>(std::llround(b.x_max)),
                     static_cast<long long>(std::llround(b.y_max))});
    j["boxes"] = arr;
    out << j.dump() << "\n";
  }
  if (!out) throw IoError("failed writing proposals file " + path);
}

ProposalMapBoxes load_proposals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read proposals file " + path);
  ProposalMapBoxes out;
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
    if (!j.contains("image") || !j.contains("boxes"))
      throw ParseError(path + ":" + std::to_string(lineno) + ": missing image/boxes");
    std::vector<BoundingBox> boxes;
    for (const auto& b : j["boxes"]) {
      if (!b.is_array() || b.size() != 4)
        throw ParseError(path + ":" + std::to_string(lineno) + ": box must have 4 numbers");
      boxes.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                       b[3].get<double>()});
    }
    out[j["image"].get<std::string>()] = std::move(boxes);
  }
  return out;
}

}  // namespace logodet
