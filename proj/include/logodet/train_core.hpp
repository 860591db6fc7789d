#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "logodet/image.hpp"
#include "logodet/nn_core.hpp"

namespace logodet {

// Order-sensitive hash over the piecewise-linear region choices made during a
// forward pass (ReLU masks, pool argmaxes, smooth-L1 zones). Two evaluations
// with equal hashes stayed on the same smooth piece, so central differences
// are trustworthy there.
struct KinkHash {
  uint64_t h = 1469598103934665603ull;

  void add_bytes(const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  }
  template <typename T>
  void add_vec(const std::vector<T>& v) {
    add_bytes(v.data(), v.size() * sizeof(T));
  }
};

template <typename T>
TensorT<T> image_to_tensor_t(const Image& img) {
  TensorT<T> t({img.height, img.width, 3});
  for (size_t i = 0; i < img.data.size(); ++i)
    t.data[i] = static_cast<T>(img.data[i]) / T(255) - T(0.5);
  return t;
}

template <typename T>
struct TrainRoiT {
  BoundingBox box;
  int label = 0;              // 0 = background
  std::array<T, 4> target{};  // normalized regression space, used iff label >= 1
};

// Loss and head gradients for one RoI. probs are softmax outputs of the class
// logits; dlogits is the gradient at the logits (softmax folded in), doffsets
// at the regressor output. Returns the scalar loss.
template <typename T>
double roi_loss(const std::vector<double>& probs, const std::vector<T>& offsets, int label,
                const std::array<T, 4>& target, double lambda, std::vector<T>* dlogits,
                std::vector<T>* doffsets, KinkHash* kink) {
  double p_label = std::max(probs[static_cast<size_t>(label)], 1e-300);
  double loss = -std::log(p_label);

  if (dlogits) {
    dlogits->assign(probs.size(), T(0));
    for (size_t j = 0; j < probs.size(); ++j)
      (*dlogits)[j] = static_cast<T>(probs[j] - (static_cast<int>(j) == label ? 1.0 : 0.0));
  }
  if (doffsets) doffsets->assign(offsets.size(), T(0));

  if (label >= 1) {
    size_t base = 4 * (static_cast<size_t>(label) - 1);
    for (size_t k = 0; k < 4; ++k) {
      double r = static_cast<double>(offsets[base + k]) - static_cast<double>(target[k]);
      bool quad = std::abs(r) < 1.0;
      loss += lambda * (quad ? 0.5 * r * r : std::abs(r) - 0.5);
      if (doffsets)
        (*doffsets)[base + k] = static_cast<T>(lambda * (quad ? r : (r > 0 ? 1.0 : -1.0)));
      if (kink) {
        uint8_t zone = quad ? 1 : (r > 0 ? 2 : 0);
        kink->add_bytes(&zone, 1);
      }
    }
  }
  return loss;
}

namespace detail {

template <typename T>
void hash_backbone_cache(const BackboneCacheT<T>& bc, KinkHash& kink) {
  for (const auto& layer : bc.layers) {
    kink.add_vec(layer.relu_mask);
    kink.add_vec(layer.pool_argmax);
  }
}

// Forward (and optionally backward) for all RoIs of one image in shared-map
// mode. Appends per-roi losses; accumulates into grads when given.
template <typename T>
double image_loss_shared(const NetParamsT<T>& p, const Image& img,
                         const std::vector<TrainRoiT<T>>& rois, double lambda,
                         GradsT<T>* grads, KinkHash* kink) {
  const bool need_cache = grads != nullptr || kink != nullptr;
  TensorT<T> input = image_to_tensor_t<T>(img);
  BackboneCacheT<T> bc;
  TensorT<T> fm = backbone_forward_t(p, input, need_cache ? &bc : nullptr);
  if (kink) hash_backbone_cache(bc, *kink);

  TensorT<T> dfm;
  if (grads) dfm = TensorT<T>(fm.shape);

  double total = 0.0;
  for (const auto& roi : rois) {
    RoiPoolIndex idx;
    auto pooled = spp_pool_t(fm, roi.box, p.stride(), p.pooling, need_cache ? &idx : nullptr);
    TrunkCacheT<T> tc;
    auto tout = trunk_forward_t(p, pooled, need_cache ? &tc : nullptr);
    auto logits = fc_forward(p.cls_head, tout);
    auto offs = fc_forward(p.bbox_head, tout);
    auto probs = softmax_probs(logits);

    std::vector<T> dlogits, doffs;
    total += roi_loss(probs, offs, roi.label, roi.target, lambda,
                      grads ? &dlogits : nullptr, grads ? &doffs : nullptr, kink);
    if (kink) {
      kink->add_vec(idx.argmax);
      for (const auto& m : tc.masks) kink->add_vec(m);
    }
    if (grads) {
      auto d_tout = fc_backward(p.cls_head, tout, dlogits, grads->cls_w, grads->cls_b);
      auto d_bbox = fc_backward(p.bbox_head, tout, doffs, grads->bbox_w, grads->bbox_b);
      for (size_t i = 0; i < d_tout.size(); ++i) d_tout[i] += d_bbox[i];
      auto d_pooled = trunk_backward_t(p, tc, std::move(d_tout), *grads);
      roi_pool_backward_t(idx, d_pooled, dfm);
    }
  }
  if (grads) backbone_backward_t(p, bc, dfm, *grads);
  return total;
}

// Per-region mode: every RoI is warped to a fixed square and gets its own
// backbone pass.
template <typename T>
double image_loss_per_region(const NetParamsT<T>& p, const Image& img,
                             const std::vector<TrainRoiT<T>>& rois, double lambda,
                             GradsT<T>* grads, KinkHash* kink) {
  const bool need_cache = grads != nullptr || kink != nullptr;
  const int side = p.stride() * std::max(p.pooling.max_h(), p.pooling.max_w());
  const BoundingBox whole{0.0, 0.0, static_cast<double>(side), static_cast<double>(side)};

  double total = 0.0;
  for (const auto& roi : rois) {
    Image patch = warp_region_image(img, roi.box, side, side);
    TensorT<T> input = image_to_tensor_t<T>(patch);
    BackboneCacheT<T> bc;
    TensorT<T> fm = backbone_forward_t(p, input, need_cache ? &bc : nullptr);
    if (kink) hash_backbone_cache(bc, *kink);

    RoiPoolIndex idx;
    auto pooled = spp_pool_t(fm, whole, p.stride(), p.pooling, need_cache ? &idx : nullptr);
    TrunkCacheT<T> tc;
    auto tout = trunk_forward_t(p, pooled, need_cache ? &tc : nullptr);
    auto logits = fc_forward(p.cls_head, tout);
    auto offs = fc_forward(p.bbox_head, tout);
    auto probs = softmax_probs(logits);

    std::vector<T> dlogits, doffs;
    total += roi_loss(probs, offs, roi.label, roi.target, lambda,
                      grads ? &dlogits : nullptr, grads ? &doffs : nullptr, kink);
    if (kink) {
      kink->add_vec(idx.argmax);
      for (const auto& m : tc.masks) kink->add_vec(m);
    }
    if (grads) {
      auto d_tout = fc_backward(p.cls_head, tout, dlogits, grads->cls_w, grads->cls_b);
      auto d_bbox = fc_backward(p.bbox_head, tout, doffs, grads->bbox_w, grads->bbox_b);
      for (size_t i = 0; i < d_tout.size(); ++i) d_tout[i] += d_bbox[i];
      auto d_pooled = trunk_backward_t(p, tc, std::move(d_tout), *grads);
      TensorT<T> dfm(fm.shape);
      roi_pool_backward_t(idx, d_pooled, dfm);
      backbone_backward_t(p, bc, dfm, *grads);
    }
  }
  return total;
}

}  // namespace detail

// Sum of per-RoI multitask losses over a batch of images; the caller divides
// by the RoI count. Accumulates parameter gradients when grads is given and
// folds region choices into kink when given.
template <typename T>
double batch_loss_and_grads(const NetParamsT<T>& p, const std::vector<const Image*>& images,
                            const std::vector<std::vector<TrainRoiT<T>>>& rois_per_image,
                            double lambda, GradsT<T>* grads, KinkHash* kink) {
  double total = 0.0;
  for (size_t i = 0; i < images.size(); ++i) {
    if (p.mode == PipelineMode::kSharedMap)
      total += detail::image_loss_shared(p, *images[i], rois_per_image[i], lambda, grads, kink);
    else
      total +=
          detail::image_loss_per_region(p, *images[i], rois_per_image[i], lambda, grads, kink);
  }
  return total;
}

}  // namespace logodet
