#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "logodet/dataset.hpp"
#include "logodet/network.hpp"

namespace logodet {

struct TrainConfig {
  int iterations = 2000;
  double learning_rate = 0.01;
  double lr_decay = 0.1;
  int lr_step = 0;  // decay every lr_step iterations; 0 disables
  double momentum = 0.9;
  double weight_decay = 5e-4;
  int images_per_batch = 2;
  int rois_per_image = 32;
  double fg_fraction = 0.25;
  double fg_iou = 0.5;
  double bg_iou_lo = 0.1;
  double bg_iou_hi = 0.5;
  double loss_lambda = 1.0;
  bool include_gt_rois = true;  // append ground-truth boxes to the proposal set
  int resample_retries = 4;
  uint64_t seed = 1;

  void validate() const;
};

struct LabeledRoi {
  BoundingBox box;
  int label = 0;  // 0 = background
  std::optional<RegressionTarget> target;
  double max_iou = 0.0;
};

// Matches each proposal to its highest-IoU ground-truth object (ties go to
// the earliest object). IoU >= fg threshold: labeled with that class and an
// encode target. IoU in [bg_lo, bg_hi): background. Anything else is dropped.
std::vector<LabeledRoi> assign_roi_labels(const std::vector<BoundingBox>& proposals,
                                          const std::vector<GtObject>& gts,
                                          const TrainConfig& cfg);

struct MultitaskLoss {
  double loss = 0.0;
  std::vector<double> dprobs;    // gradient at the probability inputs
  std::vector<double> dlogits;   // gradient at the logits, softmax folded in
  std::vector<double> doffsets;  // gradient at the regressor output
};

// loss = -log p_label + lambda * [label >= 1] * smoothL1(offsets_label - target).
// offsets and target must live in the same (normalized or raw) space.
MultitaskLoss multitask_loss(const std::vector<double>& class_probs,
                             const std::vector<double>& offsets, int label,
                             const std::optional<RegressionTarget>& target, double lambda);

using ProposalMap = std::map<std::string, std::vector<BoundingBox>>;

struct TrainResult {
  NetworkParams params;
  std::vector<double> loss_trace;  // one entry per iteration; NaN for skipped
  int skipped_minibatches = 0;
};

// SGD with momentum over minibatches of images_per_batch x rois_per_image
// RoIs. Deterministic given cfg.seed for any thread count. A minibatch that
// still has zero foreground after resample_retries is skipped and counted.
TrainResult train(const Dataset& ds, const ProposalMap& proposals, const ArchConfig& arch,
                  const TrainConfig& cfg);

struct GradCheckConfig {
  double eps = 1e-4;
  int samples_per_tensor = 8;
  uint64_t seed = 99;
  // When >= 0, analytic gradients of that parameter span (param_spans order)
  // are doubled before comparison; a working checker must flag it.
  int fault_span = -1;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  int checked = 0;
  int skipped_kinks = 0;
};

// Compares analytic end-to-end gradients against central differences on a
// tiny batch, in double precision. Per-parameter differences are normalized
// by the largest analytic gradient magnitude; parameters whose perturbed
// evaluations cross a ReLU / max-pool / smooth-L1 kink are skipped.
GradCheckReport gradient_check(const NetworkParams& params, const Image& image,
                               const std::vector<LabeledRoi>& rois, const GradCheckConfig& cfg);

}  // namespace logodet
