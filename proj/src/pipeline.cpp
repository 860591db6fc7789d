#include "logodet/pipeline.hpp"

#include <json.hpp>
#include <sys/utsname.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include "logodet/brand.hpp"
#include "logodet/checkpoint.hpp"
#include "logodet/error.hpp"
#include "logodet/parallel.hpp"
#include "logodet/postprocess.hpp"
#include "logodet/rng.hpp"

namespace logodet {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double now_sec() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fixed6(double v) {
  char buf[64];
  if (std::isnan(v)) return "nan";
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string mode_name(PipelineMode m) {
  return m == PipelineMode::kSharedMap ? "shared_map" : "per_region";
}

PipelineMode mode_from_name(const std::string& s, const std::string& key) {
  if (s == "shared_map") return PipelineMode::kSharedMap;
  if (s == "per_region") return PipelineMode::kPerRegion;
  throw ConfigError("config key " + key + ": expected \"shared_map\" or \"per_region\", got \"" +
                    s + "\"");
}

std::string interp_name(PrInterpolation p) {
  return p == PrInterpolation::kAllPoints ? "all_points" : "eleven_point";
}

PrInterpolation interp_from_name(const std::string& s, const std::string& key) {
  if (s == "all_points") return PrInterpolation::kAllPoints;
  if (s == "eleven_point") return PrInterpolation::kElevenPoint;
  throw ConfigError("config key " + key + ": expected \"all_points\" or \"eleven_point\", got \"" +
                    s + "\"");
}

std::string agg_name(BrandAggregation a) {
  return a == BrandAggregation::kMax ? "max" : "sum";
}

BrandAggregation agg_from_name(const std::string& s, const std::string& key) {
  if (s == "max") return BrandAggregation::kMax;
  if (s == "sum") return BrandAggregation::kSum;
  throw ConfigError("config key " + key + ": expected \"max\" or \"sum\", got \"" + s + "\"");
}

json config_to_json(const PipelineConfig& c) {
  json color_spaces = json::array();
  for (ColorSpace cs : c.proposals.color_spaces) color_spaces.push_back(color_space_name(cs));
  json pooling = json::array();
  for (const auto& l : c.arch.pooling.levels) pooling.push_back({l.first, l.second});

  return json{
      {"data",
       {{"num_classes", c.num_classes},
        {"num_brands", c.num_brands},
        {"n_images", c.n_images},
        {"image_width", c.image_width},
        {"image_height", c.image_height},
        {"n_backgrounds", c.n_backgrounds},
        {"template_side", c.template_side}}},
      {"split", {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}}},
      {"synth",
       {{"scale_lo", c.synth.scale_lo},
        {"scale_hi", c.synth.scale_hi},
        {"rotation_max_deg", c.synth.rotation_max_deg},
        {"shear_max", c.synth.shear_max},
        {"brightness_jitter", c.synth.brightness_jitter},
        {"color_jitter", c.synth.color_jitter},
        {"occlusion_lo", c.synth.occlusion_lo},
        {"occlusion_hi", c.synth.occlusion_hi},
        {"objects_min", c.synth.objects_min},
        {"objects_max", c.synth.objects_max}}},
      {"proposals",
       {{"k", c.proposals.k},
        {"min_size", c.proposals.min_size},
        {"color_spaces", color_spaces},
        {"top_k", c.proposals.top_k}}},
      {"arch",
       {{"conv_channels", c.arch.conv_channels},
        {"conv_ksize", c.arch.conv_ksize},
        {"trunk_widths", c.arch.trunk_widths},
        {"pooling", pooling},
        {"mode", mode_name(c.arch.mode)}}},
      {"train",
       {{"iterations", c.train.iterations},
        {"learning_rate", c.train.learning_rate},
        {"lr_decay", c.train.lr_decay},
        {"lr_step", c.train.lr_step},
        {"momentum", c.train.momentum},
        {"weight_decay", c.train.weight_decay},
        {"images_per_batch", c.train.images_per_batch},
        {"rois_per_image", c.train.rois_per_image},
        {"fg_fraction", c.train.fg_fraction},
        {"fg_iou", c.train.fg_iou},
        {"bg_iou_lo", c.train.bg_iou_lo},
        {"bg_iou_hi", c.train.bg_iou_hi},
        {"loss_lambda", c.train.loss_lambda},
        {"include_gt_rois", c.train.include_gt_rois},
        {"resample_retries", c.train.resample_retries},
        {"fraction", c.train_fraction}}},
      {"detect", {{"score_threshold", c.score_threshold}, {"nms_iou", c.nms_iou}}},
      {"eval",
       {{"iou", c.eval_iou},
        {"interpolation", interp_name(c.interpolation)},
        {"brand_min_score", c.brand_min_score},
        {"aggregation", agg_name(c.aggregation)},
        {"overlays", c.overlay_count}}},
      {"svd", {{"rank", c.svd.rank}, {"energy", c.svd.energy}, {"fraction", c.svd.fraction}}},
      {"benchmark", {{"images", c.benchmark_images}, {"warmup", c.benchmark_warmup}}},
      {"seed", c.seed},
      {"threads", c.threads}};
}

void check_unknown_keys(const json& file, const json& ref, const std::string& prefix) {
  for (const auto& [key, value] : file.items()) {
    std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!ref.contains(key)) throw ConfigError("unknown config key: " + path);
    if (value.is_object()) {
      if (!ref.at(key).is_object())
        throw ConfigError("config key " + path + " must be a scalar or array, not an object");
      check_unknown_keys(value, ref.at(key), path);
    } else if (ref.at(key).is_object()) {
      throw ConfigError("config key " + path + " must be an object");
    }
  }
}

template <typename T>
void read_key(const json& j, const std::string& section, const char* key, T& out) {
  if (!j.contains(key)) return;
  std::string path = section.empty() ? key : section + "." + std::string(key);
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key " + path + ": " + e.what());
  }
}

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  check_unknown_keys(j, config_to_json(c), "");

  if (j.contains("data")) {
    const json& d = j.at("data");
    read_key(d, "data", "num_classes", c.num_classes);
    read_key(d, "data", "num_brands", c.num_brands);
    read_key(d, "data", "n_images", c.n_images);
    read_key(d, "data", "image_width", c.image_width);
    read_key(d, "data", "image_height", c.image_height);
    read_key(d, "data", "n_backgrounds", c.n_backgrounds);
    read_key(d, "data", "template_side", c.template_side);
  }
  if (j.contains("split")) {
    const json& d = j.at("split");
    read_key(d, "split", "train", c.split.train);
    read_key(d, "split", "val", c.split.val);
    read_key(d, "split", "test", c.split.test);
  }
  if (j.contains("synth")) {
    const json& d = j.at("synth");
    read_key(d, "synth", "scale_lo", c.synth.scale_lo);
    read_key(d, "synth", "scale_hi", c.synth.scale_hi);
    read_key(d, "synth", "rotation_max_deg", c.synth.rotation_max_deg);
    read_key(d, "synth", "shear_max", c.synth.shear_max);
    read_key(d, "synth", "brightness_jitter", c.synth.brightness_jitter);
    read_key(d, "synth", "color_jitter", c.synth.color_jitter);
    read_key(d, "synth", "occlusion_lo", c.synth.occlusion_lo);
    read_key(d, "synth", "occlusion_hi", c.synth.occlusion_hi);
    read_key(d, "synth", "objects_min", c.synth.objects_min);
    read_key(d, "synth", "objects_max", c.synth.objects_max);
  }
  if (j.contains("proposals")) {
    const json& d = j.at("proposals");
    read_key(d, "proposals", "k", c.proposals.k);
    read_key(d, "proposals", "min_size", c.proposals.min_size);
    read_key(d, "proposals", "top_k", c.proposals.top_k);
    if (d.contains("color_spaces")) {
      c.proposals.color_spaces.clear();
      try {
        for (const auto& name : d.at("color_spaces"))
          c.proposals.color_spaces.push_back(color_space_from_name(name.get<std::string>()));
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config key proposals.color_spaces: ") + e.what());
      } catch (const Error& e) {
        throw ConfigError(std::string("config key proposals.color_spaces: ") + e.what());
      }
    }
  }
  if (j.contains("arch")) {
    const json& d = j.at("arch");
    read_key(d, "arch", "conv_channels", c.arch.conv_channels);
    read_key(d, "arch", "conv_ksize", c.arch.conv_ksize);
    read_key(d, "arch", "trunk_widths", c.arch.trunk_widths);
    if (d.contains("pooling")) {
      c.arch.pooling.levels.clear();
      try {
        for (const auto& level : d.at("pooling")) {
          if (!level.is_array() || level.size() != 2)
            throw ConfigError("config key arch.pooling: each level must be [rows, cols]");
          c.arch.pooling.levels.emplace_back(level[0].get<int>(), level[1].get<int>());
        }
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config key arch.pooling: ") + e.what());
      }
    }
    if (d.contains("mode"))
      c.arch.mode = mode_from_name(d.at("mode").get<std::string>(), "arch.mode");
  }
  if (j.contains("train")) {
    const json& d = j.at("train");
    read_key(d, "train", "iterations", c.train.iterations);
    read_key(d, "train", "learning_rate", c.train.learning_rate);
    read_key(d, "train", "lr_decay", c.train.lr_decay);
    read_key(d, "train", "lr_step", c.train.lr_step);
    read_key(d, "train", "momentum", c.train.momentum);
    read_key(d, "train", "weight_decay", c.train.weight_decay);
    read_key(d, "train", "images_per_batch", c.train.images_per_batch);
    read_key(d, "train", "rois_per_image", c.train.rois_per_image);
    read_key(d, "train", "fg_fraction", c.train.fg_fraction);
    read_key(d, "train", "fg_iou", c.train.fg_iou);
    read_key(d, "train", "bg_iou_lo", c.train.bg_iou_lo);
    read_key(d, "train", "bg_iou_hi", c.train.bg_iou_hi);
    read_key(d, "train", "loss_lambda", c.train.loss_lambda);
    read_key(d, "train", "include_gt_rois", c.train.include_gt_rois);
    read_key(d, "train", "resample_retries", c.train.resample_retries);
    read_key(d, "train", "fraction", c.train_fraction);
  }
  if (j.contains("detect")) {
    const json& d = j.at("detect");
    read_key(d, "detect", "score_threshold", c.score_threshold);
    read_key(d, "detect", "nms_iou", c.nms_iou);
  }
  if (j.contains("eval")) {
    const json& d = j.at("eval");
    read_key(d, "eval", "iou", c.eval_iou);
    read_key(d, "eval", "brand_min_score", c.brand_min_score);
    read_key(d, "eval", "overlays", c.overlay_count);
    if (d.contains("interpolation"))
      c.interpolation =
          interp_from_name(d.at("interpolation").get<std::string>(), "eval.interpolation");
    if (d.contains("aggregation"))
      c.aggregation = agg_from_name(d.at("aggregation").get<std::string>(), "eval.aggregation");
  }
  if (j.contains("svd")) {
    const json& d = j.at("svd");
    read_key(d, "svd", "rank", c.svd.rank);
    read_key(d, "svd", "energy", c.svd.energy);
    read_key(d, "svd", "fraction", c.svd.fraction);
  }
  if (j.contains("benchmark")) {
    const json& d = j.at("benchmark");
    read_key(d, "benchmark", "images", c.benchmark_images);
    read_key(d, "benchmark", "warmup", c.benchmark_warmup);
  }
  read_key(j, "", "seed", c.seed);
  read_key(j, "", "threads", c.threads);

  c.validate();
  return c;
}

Dataset load_split(const std::string& run_dir, const std::string& split) {
  std::string dir = dataset_dir(run_dir);
  if (split.empty()) return load_dataset(dir);
  if (split != "train" && split != "val" && split != "test")
    throw ConfigError("unknown split '" + split + "' (expected train, val, or test)");
  return load_dataset(dir, "annotations_" + split + ".jsonl");
}

ProposalMapBoxes load_split_proposals(const std::string& run_dir, const std::string& split) {
  std::string path = proposals_path(run_dir, split);
  if (!fs::exists(path))
    throw ConfigError(path + " not found; run the propose command for split '" + split +
                      "' first");
  return load_proposals(path);
}

// Deterministic leading share of the train split (same shuffle for every
// fraction, so smaller fractions are strict subsets of larger ones).
Dataset subset_train(const Dataset& ds, double fraction, uint64_t seed) {
  if (fraction >= 1.0) return ds;
  size_t n = ds.annotations.size();
  size_t keep = std::max<size_t>(1, static_cast<size_t>(std::ceil(fraction * n)));
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng = stream_rng(seed, 0x7fca11u);
  shuffle(order, rng);
  order.resize(keep);
  std::sort(order.begin(), order.end());
  Dataset out;
  out.brand_map = ds.brand_map;
  out.root = ds.root;
  for (size_t i : order) out.annotations.push_back(ds.annotations[i]);
  return out;
}

// Detection over a whole split with the images loaded from disk. Images run
// sequentially; detect_image parallelizes over RoIs internally. max_boxes
// truncates each ranked proposal list (0 keeps all).
DetectionMap run_detection(const PipelineConfig& cfg, const NetworkParams& params,
                           const Dataset& ds, const ProposalMapBoxes& proposals,
                           int max_boxes = 0, int* total_passes = nullptr) {
  DetectionMap out;
  int passes = 0;
  for (const Annotation& ann : ds.annotations) {
    Image img = read_png((fs::path(ds.root) / ann.image_path).string());
    std::vector<BoundingBox> boxes;
    auto it = proposals.find(ann.image_path);
    if (it != proposals.end()) {
      boxes = it->second;
      if (max_boxes > 0 && static_cast<int>(boxes.size()) > max_boxes) boxes.resize(max_boxes);
    }
    DetectStats stats;
    std::vector<RoiOutput> outputs = detect_image(params, img, boxes, &stats);
    passes += stats.backbone_passes;
    std::vector<Detection> dets =
        decode_detections(boxes, outputs, cfg.score_threshold, ann.width, ann.height);
    out[ann.image_path] = nms(dets, cfg.nms_iou);
  }
  if (total_passes) *total_passes = passes;
  return out;
}

struct BrandEval {
  BrandAccuracy accuracy;
  double auc = std::numeric_limits<double>::quiet_NaN();
  std::map<std::string, BrandPrediction> predictions;
};

BrandEval evaluate_brands(const PipelineConfig& cfg, const Dataset& ds,
                          const DetectionMap& detections) {
  BrandEval out;
  std::map<std::string, int> labels = brand_labels(ds);
  std::map<std::string, int> decisions;
  std::map<std::string, std::vector<double>> scores;
  static const std::vector<Detection> kNoDetections;
  for (const auto& [image, label] : labels) {
    (void)label;
    auto it = detections.find(image);
    const std::vector<Detection>& dets = it == detections.end() ? kNoDetections : it->second;
    BrandPrediction pred =
        make_brand_prediction(dets, ds.brand_map, cfg.brand_min_score, cfg.aggregation);
    decisions[image] = pred.decision;
    scores[image] = pred.scores;
    out.predictions.emplace(image, std::move(pred));
  }
  out.accuracy = brand_accuracy(decisions, labels, ds.brand_map.num_brands());
  try {
    out.auc = brand_auc(scores, labels, ds.brand_map.num_brands());
  } catch (const DegenerateClass& e) {
    std::fprintf(stderr, "warning: brand AUC unavailable: %s\n", e.what());
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "warning: brand AUC unavailable: %s\n", e.what());
  }
  return out;
}

EvalSummary summarize(const PipelineConfig& cfg, const Dataset& ds, const DetectionMap& dets,
                      double iou) {
  DetectionEval de = evaluate_detections(dets, ds, iou, cfg.interpolation);
  BrandEval be = evaluate_brands(cfg, ds, dets);
  EvalSummary s;
  s.map = de.map;
  s.brand_micro = be.accuracy.micro;
  s.brand_macro = be.accuracy.macro;
  s.auc = be.auc;
  for (const ClassApRow& row : de.per_class)
    if (row.has_gt) ++s.classes_evaluated;
  return s;
}

StageTiming timing_stats(std::vector<double> ms) {
  StageTiming t;
  if (ms.empty()) return t;
  double sum = 0.0;
  for (double v : ms) sum += v;
  t.mean_ms = sum / static_cast<double>(ms.size());
  double var = 0.0;
  for (double v : ms) var += (v - t.mean_ms) * (v - t.mean_ms);
  t.std_ms = std::sqrt(var / static_cast<double>(ms.size()));
  std::sort(ms.begin(), ms.end());
  size_t n = ms.size();
  t.median_ms = n % 2 == 1 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  return t;
}

uint64_t fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void PipelineConfig::validate() const {
  if (num_classes < 1 || num_brands < 1 || num_brands > num_classes)
    throw ConfigError("data: need 1 <= num_brands <= num_classes");
  if (n_images < 0) throw ConfigError("data.n_images must be >= 0");
  if (image_width < 32 || image_height < 32)
    throw ConfigError("data: image size must be at least 32x32");
  if (n_backgrounds < 1) throw ConfigError("data.n_backgrounds must be >= 1");
  if (template_side < 16) throw ConfigError("data.template_side must be >= 16");
  try {
    synth.validate();
    proposals.validate();
    train.validate();
  } catch (const ValidationError& e) {
    throw ConfigError(e.what());
  }
  if (train_fraction <= 0.0 || train_fraction > 1.0)
    throw ConfigError("train.fraction must lie in (0, 1]");
  if (score_threshold < 0.0 || score_threshold > 1.0)
    throw ConfigError("detect.score_threshold must lie in [0, 1]");
  if (nms_iou <= 0.0 || nms_iou > 1.0) throw ConfigError("detect.nms_iou must lie in (0, 1]");
  if (eval_iou <= 0.0 || eval_iou > 1.0) throw ConfigError("eval.iou must lie in (0, 1]");
  if (brand_min_score < 0.0 || brand_min_score > 1.0)
    throw ConfigError("eval.brand_min_score must lie in [0, 1]");
  if (overlay_count < 0) throw ConfigError("eval.overlays must be >= 0");
  if (svd.rank < 0) throw ConfigError("svd.rank must be >= 0");
  if (svd.energy < 0.0 || svd.energy > 1.0) throw ConfigError("svd.energy must lie in [0, 1]");
  if (svd.fraction < 0.0 || svd.fraction > 1.0)
    throw ConfigError("svd.fraction must lie in [0, 1]");
  if (benchmark_images < 1) throw ConfigError("benchmark.images must be >= 1");
  if (benchmark_warmup < 0) throw ConfigError("benchmark.warmup must be >= 0");
  if (threads < 0) throw ConfigError("threads must be >= 0");
  if (arch.conv_channels.empty() || arch.trunk_widths.empty() || arch.pooling.levels.empty())
    throw ConfigError("arch: conv_channels, trunk_widths, and pooling must be non-empty");
  for (int ch : arch.conv_channels)
    if (ch < 1) throw ConfigError("arch.conv_channels entries must be >= 1");
  for (int w : arch.trunk_widths)
    if (w < 1) throw ConfigError("arch.trunk_widths entries must be >= 1");
  for (const auto& l : arch.pooling.levels)
    if (l.first < 1 || l.second < 1) throw ConfigError("arch.pooling levels must be >= 1x1");
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config root must be a JSON object");
  return config_from_json(j);
}

void apply_overrides(PipelineConfig& cfg, const std::vector<std::string>& overrides) {
  if (overrides.empty()) return;
  json j = config_to_json(cfg);
  for (const std::string& ov : overrides) {
    size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("override '" + ov + "' must look like section.key=value");
    std::string path = ov.substr(0, eq);
    std::string text = ov.substr(eq + 1);
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;  // bare words are strings
    }
    json* node = &j;
    size_t start = 0;
    for (;;) {
      size_t dot = path.find('.', start);
      std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
      if (key.empty()) throw ConfigError("override '" + ov + "' has an empty key segment");
      if (dot == std::string::npos) {
        (*node)[key] = value;
        break;
      }
      if (!node->contains(key)) (*node)[key] = json::object();
      node = &(*node)[key];
      start = dot + 1;
    }
  }
  cfg = config_from_json(j);
}

std::string config_to_json_text(const PipelineConfig& cfg) { return config_to_json(cfg).dump(2); }

std::string config_hash(const PipelineConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_to_json_text(cfg))));
  return buf;
}

void save_config(const PipelineConfig& cfg, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write config to " + path);
  out << config_to_json_text(cfg) << "\n";
}

std::string dataset_dir(const std::string& run_dir) { return (fs::path(run_dir) / "data").string(); }

std::string proposals_path(const std::string& run_dir, const std::string& split) {
  return (fs::path(run_dir) / ("proposals_" + (split.empty() ? "all" : split) + ".jsonl"))
      .string();
}

std::string detections_path(const std::string& run_dir, const std::string& split) {
  return (fs::path(run_dir) / ("detections_" + (split.empty() ? "all" : split) + ".jsonl"))
      .string();
}

std::string checkpoint_path(const std::string& run_dir, bool compressed) {
  return (fs::path(run_dir) / (compressed ? "model_compressed.ckpt" : "model.ckpt")).string();
}

void write_manifest(const std::string& run_dir, const std::string& command,
                    const PipelineConfig& cfg,
                    const std::vector<std::pair<std::string, double>>& metrics,
                    const std::vector<std::pair<std::string, double>>& timings) {
  json m{{"command", command},
         {"config_hash", config_hash(cfg)},
         {"seed", cfg.seed},
         {"threads", thread_count()},
         {"versions", {{"project", kProjectVersion}, {"config_format", 1}}},
         {"machine", machine_description()},
         {"metrics", json::object()},
         {"timings_sec", json::object()}};
  for (const auto& [k, v] : metrics) m["metrics"][k] = v;
  for (const auto& [k, v] : timings) m["timings_sec"][k] = v;
  fs::create_directories(run_dir);
  std::string path = (fs::path(run_dir) / ("manifest_" + command + ".json")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << m.dump(2) << "\n";
}

Dataset cmd_synth(const PipelineConfig& cfg, const std::string& run_dir) {
  cfg.validate();
  double t0 = now_sec();
  BrandMap map = make_synthetic_brand_map(cfg.num_classes, cfg.num_brands);
  std::vector<Image> templates = make_default_templates(map, cfg.template_side);
  std::vector<Image> backgrounds =
      make_default_backgrounds(cfg.n_backgrounds, cfg.image_width, cfg.image_height, cfg.seed);
  SynthesisParams sp = cfg.synth;
  sp.seed = cfg.seed;
  Dataset ds = synthesize_dataset(templates, backgrounds, map, sp, cfg.n_images,
                                  dataset_dir(run_dir));
  DatasetStats stats = dataset_stats(ds);
  write_manifest(run_dir, "synth", cfg,
                 {{"images", static_cast<double>(stats.num_images)},
                  {"objects", static_cast<double>(stats.num_objects)}},
                 {{"total", now_sec() - t0}});
  return ds;
}

void cmd_split(const PipelineConfig& cfg, const std::string& run_dir) {
  cfg.validate();
  double t0 = now_sec();
  Dataset ds = load_dataset(dataset_dir(run_dir));
  SplitResult parts = split_dataset(ds, cfg.split, cfg.seed);
  save_dataset(parts.train, dataset_dir(run_dir), "annotations_train.jsonl");
  save_dataset(parts.val, dataset_dir(run_dir), "annotations_val.jsonl");
  save_dataset(parts.test, dataset_dir(run_dir), "annotations_test.jsonl");
  write_manifest(run_dir, "split", cfg,
                 {{"train_images", static_cast<double>(parts.train.annotations.size())},
                  {"val_images", static_cast<double>(parts.val.annotations.size())},
                  {"test_images", static_cast<double>(parts.test.annotations.size())}},
                 {{"total", now_sec() - t0}});
}

DatasetStats cmd_stats(const PipelineConfig& cfg, const std::string& run_dir,
                       const std::string& split) {
  Dataset ds = load_split(run_dir, split);
  DatasetStats stats = dataset_stats(ds);
  write_manifest(run_dir, "stats", cfg,
                 {{"images", static_cast<double>(stats.num_images)},
                  {"objects", static_cast<double>(stats.num_objects)},
                  {"mean_width", stats.mean_width},
                  {"mean_height", stats.mean_height}},
                 {});
  return stats;
}

ProposeResult cmd_propose(const PipelineConfig& cfg, const std::string& run_dir,
                          const std::string& split) {
  cfg.validate();
  double t0 = now_sec();
  Dataset ds = load_split(run_dir, split);
  ProposalParams pp = cfg.proposals;
  pp.seed = cfg.seed;

  size_t n = ds.annotations.size();
  std::vector<std::vector<BoundingBox>> boxes(n);
  parallel_for(n, [&](size_t i) {
    const Annotation& ann = ds.annotations[i];
    Image img = read_png((fs::path(ds.root) / ann.image_path).string());
    std::vector<RegionProposal> props = selective_search(img, pp);
    boxes[i].reserve(props.size());
    for (const RegionProposal& p : props) boxes[i].push_back(p.box);
  });

  ProposeResult res;
  size_t total = 0;
  for (size_t i = 0; i < n; ++i) {
    total += boxes[i].size();
    res.proposals[ds.annotations[i].image_path] = std::move(boxes[i]);
  }
  res.mean_boxes = n == 0 ? 0.0 : static_cast<double>(total) / static_cast<double>(n);
  res.recall = proposal_recall(res.proposals, ds.annotations, cfg.eval_iou);
  save_proposals(proposals_path(run_dir, split), res.proposals);
  write_manifest(run_dir, "propose_" + (split.empty() ? std::string("all") : split), cfg,
                 {{"recall", res.recall}, {"mean_boxes", res.mean_boxes}},
                 {{"total", now_sec() - t0}});
  return res;
}

TrainResult cmd_train(const PipelineConfig& cfg, const std::string& run_dir) {
  cfg.validate();
  double t0 = now_sec();
  Dataset ds = subset_train(load_split(run_dir, "train"), cfg.train_fraction, cfg.seed);
  ProposalMapBoxes proposals = load_split_proposals(run_dir, "train");

  TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;
  TrainResult res = train(ds, proposals, cfg.arch, tc);
  save_checkpoint(checkpoint_path(run_dir, false), res.params);

  std::string trace_path = (fs::path(run_dir) / "loss_trace.csv").string();
  std::ofstream trace(trace_path, std::ios::binary);
  if (!trace) throw IoError("cannot write " + trace_path);
  trace << "iteration,loss\n";
  for (size_t i = 0; i < res.loss_trace.size(); ++i)
    trace << i << "," << fixed6(res.loss_trace[i]) << "\n";

  double final_loss = std::numeric_limits<double>::quiet_NaN();
  for (size_t i = res.loss_trace.size(); i > 0; --i)
    if (!std::isnan(res.loss_trace[i - 1])) {
      final_loss = res.loss_trace[i - 1];
      break;
    }
  write_manifest(run_dir, "train", cfg,
                 {{"train_images", static_cast<double>(ds.annotations.size())},
                  {"final_loss", final_loss},
                  {"skipped_minibatches", static_cast<double>(res.skipped_minibatches)},
                  {"parameters", static_cast<double>(count_parameters(res.params))}},
                 {{"total", now_sec() - t0}});
  return res;
}

DetectResult cmd_detect(const PipelineConfig& cfg, const std::string& run_dir,
                        const std::string& split, bool compressed_model) {
  cfg.validate();
  double t0 = now_sec();
  NetworkParams params = load_checkpoint(checkpoint_path(run_dir, compressed_model));
  params.mode = cfg.arch.mode;
  Dataset ds = load_split(run_dir, split);
  ProposalMapBoxes proposals = load_split_proposals(run_dir, split);

  DetectResult res;
  res.detections = run_detection(cfg, params, ds, proposals, 0, &res.backbone_passes);
  res.images = static_cast<int>(ds.annotations.size());
  std::string suffix = compressed_model ? "_compressed" : "";
  save_detections(detections_path(run_dir, (split.empty() ? "all" : split) + suffix),
                  res.detections);
  size_t total_dets = 0;
  for (const auto& [image, dets] : res.detections) total_dets += dets.size();
  write_manifest(run_dir, "detect_" + (split.empty() ? std::string("all") : split) + suffix, cfg,
                 {{"images", static_cast<double>(res.images)},
                  {"detections", static_cast<double>(total_dets)},
                  {"backbone_passes", static_cast<double>(res.backbone_passes)}},
                 {{"total", now_sec() - t0}});
  return res;
}

CompressResult cmd_compress(const PipelineConfig& cfg, const std::string& run_dir) {
  cfg.validate();
  double t0 = now_sec();
  NetworkParams dense = load_checkpoint(checkpoint_path(run_dir, false));
  NetworkParams compressed = compress_network(dense, cfg.svd);
  save_checkpoint(checkpoint_path(run_dir, true), compressed);

  CompressResult res;
  for (size_t l = 0; l < dense.trunk.size(); ++l) {
    const FcLayer& d = dense.trunk[l];
    const FcLayer& f = compressed.trunk[l];
    res.ranks.push_back(f.rank);
    res.flops_dense += fc_flops(d.out_dim(), d.in_dim());
    res.flops_compressed += compressed_flops(d.out_dim(), d.in_dim(), f.rank);
    CompressedLayer layer;
    layer.first = f.w_first;
    layer.second = f.w_second;
    layer.bias = f.b;
    layer.rank = f.rank;
    res.recon_error.push_back(reconstruction_error(layer, d.w));
  }
  // Heads stay dense in both networks and cost the same either way.
  uint64_t head_flops = fc_flops(dense.cls_head.out_dim(), dense.cls_head.in_dim()) +
                        fc_flops(dense.bbox_head.out_dim(), dense.bbox_head.in_dim());
  res.flops_dense += head_flops;
  res.flops_compressed += head_flops;

  std::vector<std::pair<std::string, double>> metrics{
      {"flops_dense", static_cast<double>(res.flops_dense)},
      {"flops_compressed", static_cast<double>(res.flops_compressed)},
      {"flop_ratio",
       static_cast<double>(res.flops_compressed) / static_cast<double>(res.flops_dense)}};
  for (size_t l = 0; l < res.ranks.size(); ++l) {
    metrics.emplace_back("rank_" + std::to_string(l), res.ranks[l]);
    metrics.emplace_back("recon_error_" + std::to_string(l), res.recon_error[l]);
  }
  write_manifest(run_dir, "compress", cfg, metrics, {{"total", now_sec() - t0}});
  return res;
}

EvalSummary cmd_evaluate(const PipelineConfig& cfg, const std::string& run_dir,
                         const std::string& split, bool compressed_model) {
  cfg.validate();
  double t0 = now_sec();
  Dataset ds = load_split(run_dir, split);
  std::string suffix = compressed_model ? "_compressed" : "";
  std::string det_path = detections_path(run_dir, (split.empty() ? "all" : split) + suffix);
  if (!fs::exists(det_path))
    throw ConfigError(det_path + " not found; run the detect command first");
  DetectionMap detections = load_detections(det_path);

  DetectionEval de = evaluate_detections(detections, ds, cfg.eval_iou, cfg.interpolation);
  BrandEval be = evaluate_brands(cfg, ds, detections);

  std::string eval_dir = (fs::path(run_dir) / "eval").string();
  fs::create_directories(eval_dir);
  save_class_ap_csv((fs::path(eval_dir) / ("class_ap" + suffix + ".csv")).string(), de);
  save_brand_accuracy_csv((fs::path(eval_dir) / ("brand_accuracy" + suffix + ".csv")).string(),
                          be.accuracy, ds.brand_map);
  save_brand_csv((fs::path(eval_dir) / ("brand_scores" + suffix + ".csv")).string(),
                 be.predictions, ds.brand_map);

  EvalSummary s;
  s.map = de.map;
  s.brand_micro = be.accuracy.micro;
  s.brand_macro = be.accuracy.macro;
  s.auc = be.auc;
  for (const ClassApRow& row : de.per_class)
    if (row.has_gt) ++s.classes_evaluated;
  save_metrics_csv((fs::path(eval_dir) / ("metrics" + suffix + ".csv")).string(),
                   {{"map", s.map},
                    {"brand_accuracy_micro", s.brand_micro},
                    {"brand_accuracy_macro", s.brand_macro},
                    {"brand_auc", s.auc},
                    {"classes_evaluated", static_cast<double>(s.classes_evaluated)},
                    {"images", static_cast<double>(ds.annotations.size())}});

  if (!compressed_model && cfg.overlay_count > 0) {
    std::string overlay_dir = (fs::path(eval_dir) / "overlays").string();
    fs::create_directories(overlay_dir);
    int count = std::min<int>(cfg.overlay_count, static_cast<int>(ds.annotations.size()));
    for (int i = 0; i < count; ++i) {
      const Annotation& ann = ds.annotations[static_cast<size_t>(i)];
      Image img = read_png((fs::path(ds.root) / ann.image_path).string());
      auto it = detections.find(ann.image_path);
      static const std::vector<Detection> kNone;
      Image overlay = render_overlay(img, ann.objects, it == detections.end() ? kNone : it->second);
      write_png(overlay,
                (fs::path(overlay_dir) / fs::path(ann.image_path).filename()).string());
    }
  }

  write_manifest(run_dir, "evaluate_" + (split.empty() ? std::string("all") : split) + suffix,
                 cfg,
                 {{"map", s.map},
                  {"brand_accuracy_micro", s.brand_micro},
                  {"brand_accuracy_macro", s.brand_macro},
                  {"brand_auc", s.auc}},
                 {{"total", now_sec() - t0}});
  return s;
}

CompressionComparison compare_compressed(const PipelineConfig& cfg, const std::string& run_dir,
                                         const std::string& split) {
  cfg.validate();
  double t0 = now_sec();
  NetworkParams dense = load_checkpoint(checkpoint_path(run_dir, false));
  NetworkParams compressed = load_checkpoint(checkpoint_path(run_dir, true));
  dense.mode = cfg.arch.mode;
  compressed.mode = cfg.arch.mode;
  Dataset ds = load_split(run_dir, split);
  ProposalMapBoxes proposals = load_split_proposals(run_dir, split);

  CompressionComparison res;

  // Per-RoI argmax agreement plus a pool of pooled features for the latency
  // measurement, capped so the timing loop stays bounded.
  std::vector<std::vector<float>> feature_pool;
  const size_t kMaxFeatures = 2000;
  size_t agree = 0;
  for (const Annotation& ann : ds.annotations) {
    auto it = proposals.find(ann.image_path);
    if (it == proposals.end() || it->second.empty()) continue;
    Image img = read_png((fs::path(ds.root) / ann.image_path).string());
    std::vector<RoiOutput> out_d = detect_image(dense, img, it->second);
    std::vector<RoiOutput> out_c = detect_image(compressed, img, it->second);
    for (size_t i = 0; i < out_d.size(); ++i) {
      size_t arg_d = std::max_element(out_d[i].class_probs.begin(), out_d[i].class_probs.end()) -
                     out_d[i].class_probs.begin();
      size_t arg_c = std::max_element(out_c[i].class_probs.begin(), out_c[i].class_probs.end()) -
                     out_c[i].class_probs.begin();
      agree += arg_d == arg_c;
      ++res.rois_compared;
    }
    if (feature_pool.size() < kMaxFeatures) {
      Tensor featmap = forward_backbone(dense, image_to_tensor(img));
      for (const BoundingBox& box : it->second) {
        if (feature_pool.size() >= kMaxFeatures) break;
        feature_pool.push_back(spp_pool(featmap, box, dense.stride(), dense.pooling));
      }
    }
  }
  res.argmax_agreement =
      res.rois_compared == 0 ? 0.0 : static_cast<double>(agree) / static_cast<double>(res.rois_compared);

  DetectionMap dets_d = run_detection(cfg, dense, ds, proposals);
  DetectionMap dets_c = run_detection(cfg, compressed, ds, proposals);
  res.map_dense = evaluate_detections(dets_d, ds, cfg.eval_iou, cfg.interpolation).map;
  res.map_compressed = evaluate_detections(dets_c, ds, cfg.eval_iou, cfg.interpolation).map;

  // FC-stage (trunk + heads) latency per RoI, median of repeated sweeps over
  // the same feature pool; one untimed warm-up sweep each.
  auto time_fc = [&](const NetworkParams& p) {
    if (feature_pool.empty()) return 0.0;
    for (const auto& v : feature_pool) head_forward(p, v);
    std::vector<double> per_run;
    for (int rep = 0; rep < 5; ++rep) {
      double s0 = now_sec();
      for (const auto& v : feature_pool) head_forward(p, v);
      per_run.push_back((now_sec() - s0) * 1e6 / static_cast<double>(feature_pool.size()));
    }
    std::sort(per_run.begin(), per_run.end());
    return per_run[per_run.size() / 2];
  };
  res.fc_us_dense = time_fc(dense);
  res.fc_us_compressed = time_fc(compressed);

  for (size_t l = 0; l < dense.trunk.size(); ++l) {
    res.flops_dense += fc_flops(dense.trunk[l].out_dim(), dense.trunk[l].in_dim());
    res.flops_compressed += compressed_flops(dense.trunk[l].out_dim(), dense.trunk[l].in_dim(),
                                             compressed.trunk[l].rank);
  }
  uint64_t head_flops = fc_flops(dense.cls_head.out_dim(), dense.cls_head.in_dim()) +
                        fc_flops(dense.bbox_head.out_dim(), dense.bbox_head.in_dim());
  res.flops_dense += head_flops;
  res.flops_compressed += head_flops;

  std::string eval_dir = (fs::path(run_dir) / "eval").string();
  fs::create_directories(eval_dir);
  save_metrics_csv((fs::path(eval_dir) / "compression.csv").string(),
                   {{"argmax_agreement", res.argmax_agreement},
                    {"map_dense", res.map_dense},
                    {"map_compressed", res.map_compressed},
                    {"flops_dense", static_cast<double>(res.flops_dense)},
                    {"flops_compressed", static_cast<double>(res.flops_compressed)},
                    {"rois_compared", static_cast<double>(res.rois_compared)}});
  // Latency is a measurement, not a function of the data; it lives in its own
  // file so result CSVs stay byte-identical across reruns.
  save_metrics_csv((fs::path(eval_dir) / "compression_timing.csv").string(),
                   {{"fc_us_dense", res.fc_us_dense},
                    {"fc_us_compressed", res.fc_us_compressed},
                    {"fc_latency_reduction",
                     res.fc_us_dense > 0.0 ? 1.0 - res.fc_us_compressed / res.fc_us_dense : 0.0}});

  write_manifest(run_dir, "compare_compressed", cfg,
                 {{"argmax_agreement", res.argmax_agreement},
                  {"map_dense", res.map_dense},
                  {"map_compressed", res.map_compressed},
                  {"fc_us_dense", res.fc_us_dense},
                  {"fc_us_compressed", res.fc_us_compressed}},
                 {{"total", now_sec() - t0}});
  return res;
}

SweepAxis sweep_axis_from_name(const std::string& name) {
  if (name == "roi_count") return SweepAxis::kRoiCount;
  if (name == "train_iterations") return SweepAxis::kTrainIterations;
  if (name == "train_fraction") return SweepAxis::kTrainFraction;
  if (name == "eval_iou") return SweepAxis::kEvalIou;
  throw ConfigError("unknown sweep axis '" + name +
                    "' (expected roi_count, train_iterations, train_fraction, or eval_iou)");
}

std::string sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kRoiCount: return "roi_count";
    case SweepAxis::kTrainIterations: return "train_iterations";
    case SweepAxis::kTrainFraction: return "train_fraction";
    case SweepAxis::kEvalIou: return "eval_iou";
  }
  return "?";
}

SweepTable cmd_sweep(const PipelineConfig& cfg, const std::string& run_dir, SweepAxis axis,
                     const std::vector<double>& values) {
  cfg.validate();
  if (values.empty()) throw ConfigError("sweep: values must be non-empty");
  for (size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1]) throw ConfigError("sweep: values must be ascending");
  double t0 = now_sec();

  Dataset test = load_split(run_dir, "test");
  ProposalMapBoxes test_proposals = load_split_proposals(run_dir, "test");

  SweepTable table;
  table.axis = axis;

  if (axis == SweepAxis::kEvalIou) {
    // One detection pass serves every IoU threshold.
    NetworkParams params = load_checkpoint(checkpoint_path(run_dir, false));
    params.mode = cfg.arch.mode;
    DetectionMap dets = run_detection(cfg, params, test, test_proposals);
    for (double v : values) {
      if (v <= 0.0 || v > 1.0) throw ConfigError("sweep: eval_iou values must lie in (0, 1]");
      EvalSummary s = summarize(cfg, test, dets, v);
      table.rows.push_back({v, s.map, s.brand_micro, s.brand_macro, s.auc,
                            proposal_recall(test_proposals, test.annotations, v)});
    }
  } else if (axis == SweepAxis::kRoiCount) {
    // Ranked proposals make each count a prefix of the same list; the trained
    // model is shared across counts.
    NetworkParams params = load_checkpoint(checkpoint_path(run_dir, false));
    params.mode = cfg.arch.mode;
    for (double v : values) {
      int count = static_cast<int>(v);
      if (count < 1 || static_cast<double>(count) != v)
        throw ConfigError("sweep: roi_count values must be positive integers");
      ProposalMapBoxes truncated;
      for (const auto& [image, boxes] : test_proposals) {
        std::vector<BoundingBox> head = boxes;
        if (static_cast<int>(head.size()) > count) head.resize(static_cast<size_t>(count));
        truncated[image] = std::move(head);
      }
      DetectionMap dets = run_detection(cfg, params, test, truncated);
      EvalSummary s = summarize(cfg, test, dets, cfg.eval_iou);
      table.rows.push_back({v, s.map, s.brand_micro, s.brand_macro, s.auc,
                            proposal_recall(truncated, test.annotations, cfg.eval_iou)});
    }
  } else {
    // Training axes retrain per value; proposals are computed once.
    Dataset full_train = load_split(run_dir, "train");
    ProposalMapBoxes train_proposals = load_split_proposals(run_dir, "train");
    double recall = proposal_recall(test_proposals, test.annotations, cfg.eval_iou);
    for (double v : values) {
      PipelineConfig c = cfg;
      if (axis == SweepAxis::kTrainIterations) {
        int iters = static_cast<int>(v);
        if (iters < 1 || static_cast<double>(iters) != v)
          throw ConfigError("sweep: train_iterations values must be positive integers");
        c.train.iterations = iters;
      } else {
        if (v <= 0.0 || v > 1.0)
          throw ConfigError("sweep: train_fraction values must lie in (0, 1]");
        c.train_fraction = v;
      }
      Dataset train_ds = subset_train(full_train, c.train_fraction, c.seed);
      TrainConfig tc = c.train;
      tc.seed = c.seed;
      TrainResult tr = train(train_ds, train_proposals, c.arch, tc);
      NetworkParams params = tr.params;
      params.mode = c.arch.mode;
      DetectionMap dets = run_detection(c, params, test, test_proposals);
      EvalSummary s = summarize(c, test, dets, c.eval_iou);
      table.rows.push_back({v, s.map, s.brand_micro, s.brand_macro, s.auc, recall});
    }
  }

  std::string path =
      (fs::path(run_dir) / ("sweep_" + sweep_axis_name(axis) + ".csv")).string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "axis,value,map,brand_accuracy_micro,brand_accuracy_macro,brand_auc,proposal_recall\n";
  for (const SweepRow& r : table.rows)
    out << sweep_axis_name(axis) << "," << fixed6(r.value) << "," << fixed6(r.map) << ","
        << fixed6(r.brand_micro) << "," << fixed6(r.brand_macro) << "," << fixed6(r.auc) << ","
        << fixed6(r.recall) << "\n";

  std::vector<std::pair<std::string, double>> metrics;
  for (const SweepRow& r : table.rows)
    metrics.emplace_back("map_at_" + fixed6(r.value), r.map);
  write_manifest(run_dir, "sweep_" + sweep_axis_name(axis), cfg, metrics,
                 {{"total", now_sec() - t0}});
  return table;
}

BenchmarkReport cmd_benchmark(const PipelineConfig& cfg, const std::string& run_dir) {
  cfg.validate();
  double t0 = now_sec();
  NetworkParams shared = load_checkpoint(checkpoint_path(run_dir, false));
  shared.mode = PipelineMode::kSharedMap;
  NetworkParams per_region = shared;
  per_region.mode = PipelineMode::kPerRegion;
  Dataset ds = load_split(run_dir, "test");

  int want = cfg.benchmark_images + cfg.benchmark_warmup;
  if (static_cast<int>(ds.annotations.size()) < want)
    throw ConfigError("benchmark: test split has " + std::to_string(ds.annotations.size()) +
                      " images, need " + std::to_string(want));
  ProposalParams pp = cfg.proposals;
  pp.seed = cfg.seed;

  BenchmarkReport rep;
  rep.machine = machine_description();
  std::vector<double> t_prop, t_shared, t_pr, t_post;
  size_t total_rois = 0;
  for (int i = 0; i < want; ++i) {
    const Annotation& ann = ds.annotations[static_cast<size_t>(i)];
    Image img = read_png((fs::path(ds.root) / ann.image_path).string());

    double s0 = now_sec();
    std::vector<RegionProposal> props = selective_search(img, pp);
    double s1 = now_sec();
    std::vector<BoundingBox> boxes;
    boxes.reserve(props.size());
    for (const RegionProposal& p : props) boxes.push_back(p.box);

    double s2 = now_sec();
    std::vector<RoiOutput> out_shared = detect_image(shared, img, boxes);
    double s3 = now_sec();
    std::vector<RoiOutput> out_pr = detect_image(per_region, img, boxes);
    double s4 = now_sec();

    std::vector<Detection> dets =
        decode_detections(boxes, out_shared, cfg.score_threshold, ann.width, ann.height);
    dets = nms(dets, cfg.nms_iou);
    brand_scores(dets, ds.brand_map, cfg.aggregation);
    double s5 = now_sec();

    if (i >= cfg.benchmark_warmup) {
      t_prop.push_back((s1 - s0) * 1e3);
      t_shared.push_back((s3 - s2) * 1e3);
      t_pr.push_back((s4 - s3) * 1e3);
      t_post.push_back((s5 - s4) * 1e3);
      total_rois += boxes.size();
    }
  }

  rep.images = cfg.benchmark_images;
  rep.mean_rois = static_cast<double>(total_rois) / std::max(1, rep.images);
  rep.proposal = timing_stats(t_prop);
  rep.network_shared = timing_stats(t_shared);
  rep.network_per_region = timing_stats(t_pr);
  rep.post = timing_stats(t_post);
  rep.mode_time_ratio =
      rep.network_shared.mean_ms > 0.0 ? rep.network_per_region.mean_ms / rep.network_shared.mean_ms
                                       : 0.0;

  std::string path = (fs::path(run_dir) / "benchmark.csv").string();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "stage,mean_ms,std_ms,median_ms\n";
  auto row = [&](const char* stage, const StageTiming& t) {
    out << stage << "," << fixed6(t.mean_ms) << "," << fixed6(t.std_ms) << ","
        << fixed6(t.median_ms) << "\n";
  };
  row("proposal", rep.proposal);
  row("network_shared_map", rep.network_shared);
  row("network_per_region", rep.network_per_region);
  row("post", rep.post);

  write_manifest(run_dir, "benchmark", cfg,
                 {{"images", static_cast<double>(rep.images)},
                  {"mean_rois", rep.mean_rois},
                  {"proposal_mean_ms", rep.proposal.mean_ms},
                  {"network_shared_mean_ms", rep.network_shared.mean_ms},
                  {"network_per_region_mean_ms", rep.network_per_region.mean_ms},
                  {"post_mean_ms", rep.post.mean_ms},
                  {"mode_time_ratio", rep.mode_time_ratio}},
                 {{"total", now_sec() - t0}});
  return rep;
}

std::string machine_description() {
  std::string cpu = "unknown cpu";
  std::ifstream info("/proc/cpuinfo");
  std::string line;
  while (std::getline(info, line)) {
    if (line.rfind("model name", 0) == 0) {
      size_t colon = line.find(':');
      if (colon != std::string::npos) {
        cpu = line.substr(colon + 1);
        size_t start = cpu.find_first_not_of(' ');
        if (start != std::string::npos) cpu = cpu.substr(start);
      }
      break;
    }
  }
  struct utsname un{};
  std::string os = uname(&un) == 0 ? std::string(un.sysname) + " " + un.release : "unknown os";
  return cpu + ", " + std::to_string(std::thread::hardware_concurrency()) + " hw threads, " + os;
}

}  // namespace logodet
