#include "logodet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "logodet/rng.hpp"
#include "logodet/train_core.hpp"

namespace logodet {

void TrainConfig::validate() const {
  if (iterations < 0) throw ConfigError("train: iterations must be >= 0");
  if (!(learning_rate > 0)) throw ConfigError("train: learning rate must be positive");
  if (!(lr_decay > 0)) throw ConfigError("train: lr decay factor must be positive");
  if (lr_step < 0) throw ConfigError("train: lr step must be >= 0");
  if (momentum < 0 || momentum >= 1) throw ConfigError("train: momentum must be in [0,1)");
  if (weight_decay < 0) throw ConfigError("train: weight decay must be >= 0");
  if (images_per_batch < 1 || rois_per_image < 1)
    throw ConfigError("train: minibatch composition must be positive");
  if (!(fg_fraction > 0 && fg_fraction < 1))
    throw ConfigError("train: foreground fraction must be in (0,1)");
  if (!(fg_iou > 0 && fg_iou <= 1)) throw ConfigError("train: fg IoU threshold out of range");
  if (bg_iou_lo < 0 || bg_iou_lo > bg_iou_hi)
    throw ConfigError("train: bg IoU interval is inverted");
  if (bg_iou_hi > fg_iou)
    throw ConfigError("train: bg interval upper bound must not exceed the fg threshold");
  if (loss_lambda < 0) throw ConfigError("train: loss lambda must be >= 0");
  if (resample_retries < 0) throw ConfigError("train: resample retries must be >= 0");
}

std::vector<LabeledRoi> assign_roi_labels(const std::vector<BoundingBox>& proposals,
                                          const std::vector<GtObject>& gts,
                                          const TrainConfig& cfg) {
  cfg.validate();
  std::vector<LabeledRoi> out;
  out.reserve(proposals.size());
  for (const auto& p : proposals) {
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      double v = iou(p, gts[g].box);
      if (v > best) {
        best = v;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0 && best >= cfg.fg_iou) {
      const auto& gt = gts[static_cast<size_t>(best_gt)];
      out.push_back({p, gt.cls, bbox_encode(p, gt.box), best});
    } else if (best >= cfg.bg_iou_lo && best < cfg.bg_iou_hi) {
      out.push_back({p, 0, std::nullopt, best});
    }
  }
  return out;
}

MultitaskLoss multitask_loss(const std::vector<double>& class_probs,
                             const std::vector<double>& offsets, int label,
                             const std::optional<RegressionTarget>& target, double lambda) {
  if (label < 0 || static_cast<size_t>(label) >= class_probs.size())
    throw ValidationError("multitask_loss: label out of range");
  if ((label >= 1) != target.has_value())
    throw ValidationError("multitask_loss: target must be present iff label >= 1");
  if (offsets.size() != 4 * (class_probs.size() - 1))
    throw ValidationError("multitask_loss: offsets length must be 4C");

  std::array<double, 4> t{};
  if (target) t = {target->tx, target->ty, target->tw, target->th};

  MultitaskLoss r;
  std::vector<double> dlogits, doffs;
  r.loss = roi_loss<double>(class_probs, offsets, label, t, lambda, &dlogits, &doffs, nullptr);
  r.dlogits = std::move(dlogits);
  r.doffsets = std::move(doffs);
  r.dprobs.assign(class_probs.size(), 0.0);
  r.dprobs[static_cast<size_t>(label)] =
      -1.0 / std::max(class_probs[static_cast<size_t>(label)], 1e-300);
  return r;
}

namespace {

constexpr uint64_t kTrainStreamBase = 1ull << 41;

struct ImagePool {
  const Annotation* ann = nullptr;
  Image pixels;
  std::vector<TrainRoiT<float>> fg;
  std::vector<TrainRoiT<float>> bg;
};

}  // namespace

TrainResult train(const Dataset& ds, const ProposalMap& proposals, const ArchConfig& arch,
                  const TrainConfig& cfg) {
  cfg.validate();
  ds.validate();

  // Label every proposal (plus GT boxes) up front; targets are fixed by
  // geometry alone, so this is safe to precompute.
  std::vector<ImagePool> pools;
  std::vector<std::array<double, 4>> all_targets;
  for (const auto& ann : ds.annotations) {
    auto it = proposals.find(ann.image_path);
    if (it == proposals.end() || it->second.empty())
      throw ValidationError("train: no proposals for image " + ann.image_path);
    std::vector<BoundingBox> boxes = it->second;
    if (cfg.include_gt_rois)
      for (const auto& g : ann.objects) boxes.push_back(g.box);

    auto labeled = assign_roi_labels(boxes, ann.objects, cfg);
    if (labeled.empty()) continue;

    ImagePool pool;
    pool.ann = &ann;
    for (const auto& l : labeled) {
      TrainRoiT<float> r;
      r.box = l.box;
      r.label = l.label;
      if (l.label >= 1) {
        all_targets.push_back({l.target->tx, l.target->ty, l.target->tw, l.target->th});
        r.target = {static_cast<float>(l.target->tx), static_cast<float>(l.target->ty),
                    static_cast<float>(l.target->tw), static_cast<float>(l.target->th)};
        pool.fg.push_back(r);
      } else {
        pool.bg.push_back(r);
      }
    }
    pools.push_back(std::move(pool));
  }
  if (pools.empty()) throw ValidationError("train: no trainable RoIs in the dataset");

  NetworkParams params = init_network(arch, static_cast<int>(ds.brand_map.num_classes()), cfg.seed);

  // Normalize regression targets to zero mean / unit spread over the dataset.
  if (!all_targets.empty()) {
    std::array<double, 4> mean{}, var{};
    for (const auto& t : all_targets)
      for (int k = 0; k < 4; ++k) mean[k] += t[k];
    for (int k = 0; k < 4; ++k) mean[k] /= static_cast<double>(all_targets.size());
    for (const auto& t : all_targets)
      for (int k = 0; k < 4; ++k) var[k] += (t[k] - mean[k]) * (t[k] - mean[k]);
    for (int k = 0; k < 4; ++k) {
      params.target_mean[k] = mean[k];
      params.target_std[k] =
          std::max(std::sqrt(var[k] / static_cast<double>(all_targets.size())), 1e-6);
    }
  }
  for (auto& pool : pools)
    for (auto& r : pool.fg)
      for (int k = 0; k < 4; ++k)
        r.target[k] = static_cast<float>(
            (static_cast<double>(r.target[k]) - params.target_mean[k]) / params.target_std[k]);

  // Pixels are loaded lazily and cached for the whole run.
  auto pixels_of = [&](ImagePool& pool) -> const Image& {
    if (pool.pixels.width == 0) pool.pixels = read_png(ds.root + "/" + pool.ann->image_path);
    return pool.pixels;
  };

  Grads grads;
  grads.init_like(params);
  auto pspans = param_spans(params);
  std::vector<std::vector<float>> velocity;
  for (const auto& s : pspans) velocity.emplace_back(s.second, 0.0f);

  const int fg_want = std::max(1, static_cast<int>(std::lround(cfg.fg_fraction *
                                                               cfg.rois_per_image)));
  TrainResult result;
  result.loss_trace.reserve(static_cast<size_t>(cfg.iterations));

  for (int it = 0; it < cfg.iterations; ++it) {
    Rng rng = stream_rng(cfg.seed, kTrainStreamBase + static_cast<uint64_t>(it));

    std::vector<const Image*> batch_images;
    std::vector<std::vector<TrainRoiT<float>>> batch_rois;
    bool have_fg = false;
    for (int attempt = 0; attempt <= cfg.resample_retries && !have_fg; ++attempt) {
      batch_images.clear();
      batch_rois.clear();
      for (int b = 0; b < cfg.images_per_batch; ++b) {
        ImagePool& pool = pools[static_cast<size_t>(rng.next_below(pools.size()))];
        std::vector<TrainRoiT<float>> sel;
        int n_fg = pool.fg.empty() ? 0 : fg_want;
        for (int i = 0; i < n_fg; ++i)
          sel.push_back(pool.fg[static_cast<size_t>(rng.next_below(pool.fg.size()))]);
        const auto& fill = pool.bg.empty() ? pool.fg : pool.bg;
        while (static_cast<int>(sel.size()) < cfg.rois_per_image)
          sel.push_back(fill[static_cast<size_t>(rng.next_below(fill.size()))]);
        have_fg = have_fg || n_fg > 0;
        batch_images.push_back(&pixels_of(pool));
        batch_rois.push_back(std::move(sel));
      }
    }
    if (!have_fg) {
      ++result.skipped_minibatches;
      result.loss_trace.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }

    grads.init_like(params);
    double total =
        batch_loss_and_grads(params, batch_images, batch_rois, cfg.loss_lambda, &grads, nullptr);
    size_t n_rois = 0;
    for (const auto& r : batch_rois) n_rois += r.size();
    const float inv_n = 1.0f / static_cast<float>(n_rois);
    result.loss_trace.push_back(total / static_cast<double>(n_rois));

    double lr = cfg.learning_rate;
    if (cfg.lr_step > 0) lr *= std::pow(cfg.lr_decay, it / cfg.lr_step);

    auto gspans = grads.spans();
    for (size_t s = 0; s < pspans.size(); ++s) {
      float* w = pspans[s].first;
      float* g = gspans[s].first;
      float* v = velocity[s].data();
      // Biases are the odd spans; they skip weight decay.
      const bool is_weight = (s % 2) == 0;
      const float wd = is_weight ? static_cast<float>(cfg.weight_decay) : 0.0f;
      const float flr = static_cast<float>(lr);
      const float mom = static_cast<float>(cfg.momentum);
      for (size_t i = 0; i < pspans[s].second; ++i) {
        float grad = g[i] * inv_n + wd * w[i];
        v[i] = mom * v[i] - flr * grad;
        w[i] += v[i];
      }
    }
  }

  result.params = std::move(params);
  return result;
}

GradCheckReport gradient_check(const NetworkParams& params, const Image& image,
                               const std::vector<LabeledRoi>& rois, const GradCheckConfig& cfg) {
  auto dparams = params.cast<double>();

  std::vector<TrainRoiT<double>> batch;
  for (const auto& r : rois) {
    TrainRoiT<double> t;
    t.box = r.box;
    t.label = r.label;
    if (r.label >= 1) {
      if (!r.target) throw ValidationError("gradient_check: foreground roi without target");
      std::array<double, 4> raw{r.target->tx, r.target->ty, r.target->tw, r.target->th};
      for (int k = 0; k < 4; ++k)
        t.target[k] = (raw[k] - dparams.target_mean[k]) / dparams.target_std[k];
    }
    batch.push_back(t);
  }
  std::vector<const Image*> images{&image};
  std::vector<std::vector<TrainRoiT<double>>> batch_rois{batch};
  const double inv_n = batch.empty() ? 1.0 : 1.0 / static_cast<double>(batch.size());

  GradsT<double> grads;
  grads.init_like(dparams);
  batch_loss_and_grads(dparams, images, batch_rois, 1.0, &grads, nullptr);
  grads.scale(inv_n);

  auto gspans = grads.spans();
  if (cfg.fault_span >= 0 && static_cast<size_t>(cfg.fault_span) < gspans.size()) {
    auto [g, n] = gspans[static_cast<size_t>(cfg.fault_span)];
    for (size_t i = 0; i < n; ++i) g[i] *= 2.0;
  }

  double gmax = 0.0;
  for (auto [g, n] : gspans)
    for (size_t i = 0; i < n; ++i) gmax = std::max(gmax, std::abs(g[i]));
  const double denom = std::max(gmax, 1e-12);

  auto loss_at = [&](uint64_t* sig) {
    KinkHash kink;
    double l = batch_loss_and_grads<double>(dparams, images, batch_rois, 1.0, nullptr, &kink) * inv_n;
    if (sig) *sig = kink.h;
    return l;
  };

  GradCheckReport report;
  auto pspans = param_spans(dparams);
  Rng rng(cfg.seed);
  for (size_t s = 0; s < pspans.size(); ++s) {
    auto [w, n] = pspans[s];
    if (n == 0) continue;
    int samples = std::min<size_t>(static_cast<size_t>(cfg.samples_per_tensor), n);
    for (int k = 0; k < samples; ++k) {
      size_t i = static_cast<size_t>(rng.next_below(n));
      const double orig = w[i];
      uint64_t sig_hi = 0, sig_lo = 0;
      w[i] = orig + cfg.eps;
      double lhi = loss_at(&sig_hi);
      w[i] = orig - cfg.eps;
      double llo = loss_at(&sig_lo);
      w[i] = orig;
      if (sig_hi != sig_lo) {
        ++report.skipped_kinks;
        continue;
      }
      double gn = (lhi - llo) / (2.0 * cfg.eps);
      double ga = gspans[s].first[i];
      report.max_rel_error = std::max(report.max_rel_error, std::abs(ga - gn) / denom);
      ++report.checked;
    }
  }
  return report;
}

}  // namespace logodet
