#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "logodet/dataset.hpp"
#include "logodet/eval.hpp"
#include "logodet/network.hpp"
#include "logodet/selective_search.hpp"
#include "logodet/svd.hpp"
#include "logodet/synth.hpp"
#include "logodet/train.hpp"

namespace logodet {

inline constexpr const char* kProjectVersion = "1.0.0";

// Everything a run needs, loadable from one JSON file whose sections mirror
// the module parameter structs. Unknown keys are rejected with their full
// dotted path so typos cannot silently fall back to defaults.
struct PipelineConfig {
  // data section: synthetic dataset shape
  int num_classes = 10;
  int num_brands = 5;
  int n_images = 800;
  int image_width = 256;
  int image_height = 256;
  int n_backgrounds = 64;
  int template_side = 96;

  SplitFractions split;
  SynthesisParams synth;
  ProposalParams proposals;
  ArchConfig arch;
  TrainConfig train;
  double train_fraction = 1.0;  // leading share of the train split to use

  // detect section
  double score_threshold = 0.05;
  double nms_iou = 0.3;

  // eval section
  double eval_iou = 0.5;
  PrInterpolation interpolation = PrInterpolation::kAllPoints;
  double brand_min_score = 0.1;
  BrandAggregation aggregation = BrandAggregation::kMax;
  int overlay_count = 8;  // qualitative overlay PNGs per evaluate run

  RankSpec svd;

  // benchmark section
  int benchmark_images = 20;
  int benchmark_warmup = 2;

  uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency

  void validate() const;
};

// Reads and validates a config JSON file. Throws ConfigError naming the
// offending key path for unknown keys, wrong types, or bad values.
PipelineConfig load_config(const std::string& path);

// Applies "dotted.path=json-value" overrides (the CLI's --set flags) on top
// of a config. Values parse as JSON scalars; bare words become strings.
void apply_overrides(PipelineConfig& cfg, const std::vector<std::string>& overrides);

// Canonical serialized form (sorted keys, stable float formatting) and its
// FNV-1a digest. Two configs hash equal iff every effective value matches.
std::string config_to_json_text(const PipelineConfig& cfg);
std::string config_hash(const PipelineConfig& cfg);
void save_config(const PipelineConfig& cfg, const std::string& path);

// Run directory layout used by the commands:
//   data/                     images plus classes.tsv and annotations*.jsonl
//   proposals_<split>.jsonl   ranked boxes per image
//   model.ckpt                trained detector
//   model_compressed.ckpt     SVD-factored detector
//   detections_<split>.jsonl  post-NMS detections
//   eval/*.csv, eval/overlays/*.png
//   sweep_<axis>.csv, benchmark.csv
//   manifest_<command>.json   config hash, seed, versions, timings
std::string dataset_dir(const std::string& run_dir);
std::string proposals_path(const std::string& run_dir, const std::string& split);
std::string detections_path(const std::string& run_dir, const std::string& split);
std::string checkpoint_path(const std::string& run_dir, bool compressed);

// Writes manifest_<command>.json. `metrics` lands under "metrics"; wall-clock
// timings land under "timings_sec" (reruns differ only there).
void write_manifest(const std::string& run_dir, const std::string& command,
                    const PipelineConfig& cfg,
                    const std::vector<std::pair<std::string, double>>& metrics,
                    const std::vector<std::pair<std::string, double>>& timings);

// ---- commands ----------------------------------------------------------
// Each cmd_* implements one CLI subcommand end to end: read inputs under
// run_dir, write outputs and a manifest, return the headline numbers.

Dataset cmd_synth(const PipelineConfig& cfg, const std::string& run_dir);

// Partitions data/annotations.jsonl into annotations_{train,val,test}.jsonl.
void cmd_split(const PipelineConfig& cfg, const std::string& run_dir);

// split may be "", "train", "val", or "test" ("" = the full dataset).
DatasetStats cmd_stats(const PipelineConfig& cfg, const std::string& run_dir,
                       const std::string& split);

struct ProposeResult {
  ProposalMapBoxes proposals;
  double recall = 0.0;  // at eval_iou against the split's ground truth
  double mean_boxes = 0.0;
};
ProposeResult cmd_propose(const PipelineConfig& cfg, const std::string& run_dir,
                          const std::string& split);

// Trains on the train split (train_fraction applied) and writes model.ckpt
// plus loss_trace.csv.
TrainResult cmd_train(const PipelineConfig& cfg, const std::string& run_dir);

struct DetectResult {
  DetectionMap detections;
  int images = 0;
  int backbone_passes = 0;
};
DetectResult cmd_detect(const PipelineConfig& cfg, const std::string& run_dir,
                        const std::string& split, bool compressed_model = false);

struct CompressResult {
  std::vector<int> ranks;          // per trunk layer
  uint64_t flops_dense = 0;        // trunk + heads multiply-accumulates
  uint64_t flops_compressed = 0;
  std::vector<double> recon_error; // per trunk layer, Frobenius relative
};
CompressResult cmd_compress(const PipelineConfig& cfg, const std::string& run_dir);

struct EvalSummary {
  double map = 0.0;
  double brand_micro = 0.0;
  double brand_macro = 0.0;
  double auc = 0.0;  // NaN when no brand is scorable
  int classes_evaluated = 0;
};
EvalSummary cmd_evaluate(const PipelineConfig& cfg, const std::string& run_dir,
                         const std::string& split, bool compressed_model = false);

// Criterion surface for the compression trade-off: per-RoI argmax agreement
// between dense and factored trunks, both mAPs, and measured per-RoI FC-stage
// (trunk + heads) latency. Writes eval/compression.csv.
struct CompressionComparison {
  double argmax_agreement = 0.0;
  double map_dense = 0.0;
  double map_compressed = 0.0;
  double fc_us_dense = 0.0;  // microseconds per RoI
  double fc_us_compressed = 0.0;
  uint64_t flops_dense = 0;
  uint64_t flops_compressed = 0;
  size_t rois_compared = 0;
};
CompressionComparison compare_compressed(const PipelineConfig& cfg, const std::string& run_dir,
                                         const std::string& split);

enum class SweepAxis { kRoiCount, kTrainIterations, kTrainFraction, kEvalIou };
SweepAxis sweep_axis_from_name(const std::string& name);
std::string sweep_axis_name(SweepAxis axis);

struct SweepRow {
  double value = 0.0;
  double map = 0.0;
  double brand_micro = 0.0;
  double brand_macro = 0.0;
  double auc = 0.0;
  double recall = 0.0;
};
struct SweepTable {
  SweepAxis axis;
  std::vector<SweepRow> rows;
};

// One evaluate cycle per axis value with the caching each axis permits:
// eval_iou reuses a single detection pass, roi_count truncates one ranked
// proposal set and reuses the trained model, the training axes retrain per
// value. Values must be ascending. Writes sweep_<axis>.csv.
SweepTable cmd_sweep(const PipelineConfig& cfg, const std::string& run_dir, SweepAxis axis,
                     const std::vector<double>& values);

struct StageTiming {
  double mean_ms = 0.0;
  double std_ms = 0.0;
  double median_ms = 0.0;
};
struct BenchmarkReport {
  int images = 0;
  double mean_rois = 0.0;
  StageTiming proposal;          // selective search per image
  StageTiming network_shared;    // detector forward, shared feature map
  StageTiming network_per_region;
  StageTiming post;              // decode + NMS + brand scores
  double mode_time_ratio = 0.0;  // per-region / shared-map network means
  std::string machine;
};

// Times each pipeline stage per image over the first benchmark_images test
// images (after benchmark_warmup warm-up images), both detector modes on the
// same checkpoint. Writes benchmark.csv; timing values are measurements and
// are exempt from the byte-identity guarantee.
BenchmarkReport cmd_benchmark(const PipelineConfig& cfg, const std::string& run_dir);

std::string machine_description();

}  // namespace logodet
