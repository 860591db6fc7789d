#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "logodet/box.hpp"
#include "logodet/error.hpp"
#include "logodet/matmul.hpp"
#include "logodet/tensor.hpp"

namespace logodet {

// Per-region warps every RoI through the full network; shared-map runs the
// backbone once per image and pools RoIs from the feature map.
enum class PipelineMode { kPerRegion, kSharedMap };

// One grid level = plain RoI pooling; several levels = pyramid pooling with
// the level outputs concatenated.
struct PoolingSpec {
  std::vector<std::pair<int, int>> levels{{4, 4}};

  int cell_count() const {
    int n = 0;
    for (const auto& l : levels) n += l.first * l.second;
    return n;
  }
  int max_h() const {
    int m = 1;
    for (const auto& l : levels) m = std::max(m, l.first);
    return m;
  }
  int max_w() const {
    int m = 1;
    for (const auto& l : levels) m = std::max(m, l.second);
    return m;
  }

  bool operator==(const PoolingSpec& o) const = default;
};

template <typename T>
struct ConvLayerT {
  int in_ch = 0;
  int out_ch = 0;
  int ksize = 3;
  int stride = 1;
  int pad = 1;
  bool pool_after = true;  // 2x2 max pool, stride 2
  bool relu = true;
  TensorT<T> w;            // [out_ch, ksize*ksize*in_ch]
  std::vector<T> b;        // [out_ch]

  template <typename U>
  ConvLayerT<U> cast() const {
    ConvLayerT<U> o{in_ch, out_ch, ksize, stride, pad, pool_after, relu,
                    w.template cast<U>(), {b.begin(), b.end()}};
    return o;
  }
  bool operator==(const ConvLayerT& o) const = default;
};

// Dense when rank == 0: y = w x + b with w [out, in].
// Factored when rank > 0: y = w_second (w_first x) + b with
// w_first [rank, in], w_second [out, rank].
template <typename T>
struct FcLayerT {
  TensorT<T> w;
  std::vector<T> b;
  int rank = 0;
  TensorT<T> w_first;
  TensorT<T> w_second;

  int out_dim() const { return rank > 0 ? w_second.shape[0] : w.shape[0]; }
  int in_dim() const { return rank > 0 ? w_first.shape[1] : w.shape[1]; }

  template <typename U>
  FcLayerT<U> cast() const {
    FcLayerT<U> o;
    o.w = w.template cast<U>();
    o.b.assign(b.begin(), b.end());
    o.rank = rank;
    o.w_first = w_first.template cast<U>();
    o.w_second = w_second.template cast<U>();
    return o;
  }
  bool operator==(const FcLayerT& o) const = default;
};

template <typename T>
struct NetParamsT {
  int num_classes = 0;  // C; heads emit C+1 probs and 4C offsets
  PipelineMode mode = PipelineMode::kSharedMap;
  PoolingSpec pooling;
  std::vector<ConvLayerT<T>> conv;
  std::vector<FcLayerT<T>> trunk;  // ReLU after every trunk layer
  FcLayerT<T> cls_head;
  FcLayerT<T> bbox_head;
  // Regression targets are trained in normalized space; these undo it.
  std::array<double, 4> target_mean{0, 0, 0, 0};
  std::array<double, 4> target_std{1, 1, 1, 1};

  int stride() const {
    int s = 1;
    for (const auto& c : conv) s *= c.stride * (c.pool_after ? 2 : 1);
    return s;
  }
  int feature_channels() const { return conv.empty() ? 3 : conv.back().out_ch; }
  int fc_input_dim() const { return feature_channels() * pooling.cell_count(); }
  // Smallest input that still yields a 1x1 feature map.
  int receptive_min() const { return stride(); }

  void validate() const {
    if (num_classes < 1) throw ValidationError("network: num_classes must be >= 1");
    int ch = 3;
    for (size_t i = 0; i < conv.size(); ++i) {
      const auto& c = conv[i];
      if (c.in_ch != ch)
        throw ValidationError("network: conv layer " + std::to_string(i) + " input mismatch");
      if (c.w.shape != std::vector<int>{c.out_ch, c.ksize * c.ksize * c.in_ch} ||
          static_cast<int>(c.b.size()) != c.out_ch)
        throw ValidationError("network: conv layer " + std::to_string(i) + " shape mismatch");
      ch = c.out_ch;
    }
    int dim = fc_input_dim();
    for (size_t i = 0; i < trunk.size(); ++i) {
      if (trunk[i].in_dim() != dim)
        throw ValidationError("network: trunk layer " + std::to_string(i) + " input mismatch");
      dim = trunk[i].out_dim();
    }
    if (cls_head.in_dim() != dim || cls_head.out_dim() != num_classes + 1)
      throw ValidationError("network: classifier head must emit C+1 outputs");
    if (bbox_head.in_dim() != dim || bbox_head.out_dim() != 4 * num_classes)
      throw ValidationError("network: regressor head must emit 4C outputs");
  }

  template <typename U>
  NetParamsT<U> cast() const {
    NetParamsT<U> o;
    o.num_classes = num_classes;
    o.mode = mode;
    o.pooling = pooling;
    for (const auto& c : conv) o.conv.push_back(c.template cast<U>());
    for (const auto& f : trunk) o.trunk.push_back(f.template cast<U>());
    o.cls_head = cls_head.template cast<U>();
    o.bbox_head = bbox_head.template cast<U>();
    o.target_mean = target_mean;
    o.target_std = target_std;
    return o;
  }
  bool operator==(const NetParamsT& o) const = default;
};

// Gradient buffers shaped like the parameters. Factored FC layers are an
// inference-time form and are not trained.
template <typename T>
struct GradsT {
  std::vector<TensorT<T>> conv_w;
  std::vector<std::vector<T>> conv_b;
  std::vector<TensorT<T>> trunk_w;
  std::vector<std::vector<T>> trunk_b;
  TensorT<T> cls_w;
  std::vector<T> cls_b;
  TensorT<T> bbox_w;
  std::vector<T> bbox_b;

  void init_like(const NetParamsT<T>& p) {
    conv_w.clear();
    conv_b.clear();
    trunk_w.clear();
    trunk_b.clear();
    for (const auto& c : p.conv) {
      conv_w.emplace_back(c.w.shape);
      conv_b.emplace_back(c.b.size(), T(0));
    }
    for (const auto& f : p.trunk) {
      trunk_w.emplace_back(f.w.shape);
      trunk_b.emplace_back(f.b.size(), T(0));
    }
    cls_w = TensorT<T>(p.cls_head.w.shape);
    cls_b.assign(p.cls_head.b.size(), T(0));
    bbox_w = TensorT<T>(p.bbox_head.w.shape);
    bbox_b.assign(p.bbox_head.b.size(), T(0));
  }

  void scale(T f) {
    for (auto s : spans())
      for (size_t i = 0; i < s.second; ++i) s.first[i] *= f;
  }

  // Parameter-aligned flat views; order must match param_spans().
  std::vector<std::pair<T*, size_t>> spans() {
    std::vector<std::pair<T*, size_t>> out;
    for (size_t i = 0; i < conv_w.size(); ++i) {
      out.push_back({conv_w[i].data.data(), conv_w[i].numel()});
      out.push_back({conv_b[i].data(), conv_b[i].size()});
    }
    for (size_t i = 0; i < trunk_w.size(); ++i) {
      out.push_back({trunk_w[i].data.data(), trunk_w[i].numel()});
      out.push_back({trunk_b[i].data(), trunk_b[i].size()});
    }
    out.push_back({cls_w.data.data(), cls_w.numel()});
    out.push_back({cls_b.data(), cls_b.size()});
    out.push_back({bbox_w.data.data(), bbox_w.numel()});
    out.push_back({bbox_b.data(), bbox_b.size()});
    return out;
  }
};

template <typename T>
std::vector<std::pair<T*, size_t>> param_spans(NetParamsT<T>& p) {
  std::vector<std::pair<T*, size_t>> out;
  for (auto& c : p.conv) {
    out.push_back({c.w.data.data(), c.w.numel()});
    out.push_back({c.b.data(), c.b.size()});
  }
  for (auto& f : p.trunk) {
    out.push_back({f.w.data.data(), f.w.numel()});
    out.push_back({f.b.data(), f.b.size()});
  }
  out.push_back({p.cls_head.w.data.data(), p.cls_head.w.numel()});
  out.push_back({p.cls_head.b.data(), p.cls_head.b.size()});
  out.push_back({p.bbox_head.w.data.data(), p.bbox_head.w.numel()});
  out.push_back({p.bbox_head.b.data(), p.bbox_head.b.size()});
  return out;
}

// ---------------------------------------------------------------------------
// Convolution kernels (im2col + GEMM, channel-last).
// ---------------------------------------------------------------------------

template <typename T>
struct ConvCacheT {
  TensorT<T> cols;             // [positions, k*k*in_ch]
  std::vector<uint8_t> relu_mask;  // per pre-pool element
  std::vector<int> pool_argmax;    // per post-pool element: linear pre-pool idx
  int pre_h = 0, pre_w = 0;
  int in_h = 0, in_w = 0;
};

template <typename T>
struct BackboneCacheT {
  std::vector<ConvCacheT<T>> layers;
};

template <typename T>
void im2col(const TensorT<T>& in, int ksize, int stride, int pad, TensorT<T>& cols,
            int& out_h, int& out_w) {
  const int h = in.shape[0], w = in.shape[1], ch = in.shape[2];
  out_h = (h + 2 * pad - ksize) / stride + 1;
  out_w = (w + 2 * pad - ksize) / stride + 1;
  const int kk = ksize * ksize * ch;
  cols = TensorT<T>({out_h * out_w, kk});
  parallel_for(static_cast<size_t>(out_h), [&](size_t oy_s) {
    int oy = static_cast<int>(oy_s);
    for (int ox = 0; ox < out_w; ++ox) {
      T* row = cols.data.data() + (static_cast<size_t>(oy) * out_w + ox) * kk;
      int idx = 0;
      for (int ky = 0; ky < ksize; ++ky) {
        int iy = oy * stride - pad + ky;
        for (int kx = 0; kx < ksize; ++kx) {
          int ix = ox * stride - pad + kx;
          if (iy < 0 || iy >= h || ix < 0 || ix >= w) {
            for (int c = 0; c < ch; ++c) row[idx++] = T(0);
          } else {
            const T* src = in.data.data() + (static_cast<size_t>(iy) * w + ix) * ch;
            for (int c = 0; c < ch; ++c) row[idx++] = src[c];
          }
        }
      }
    }
  });
}

template <typename T>
void col2im_accumulate(const TensorT<T>& dcols, int in_h, int in_w, int ch, int ksize,
                       int stride, int pad, TensorT<T>& din) {
  const int out_h = (in_h + 2 * pad - ksize) / stride + 1;
  const int out_w = (in_w + 2 * pad - ksize) / stride + 1;
  const int kk = ksize * ksize * ch;
  for (int oy = 0; oy < out_h; ++oy) {
    for (int ox = 0; ox < out_w; ++ox) {
      const T* row = dcols.data.data() + (static_cast<size_t>(oy) * out_w + ox) * kk;
      int idx = 0;
      for (int ky = 0; ky < ksize; ++ky) {
        int iy = oy * stride - pad + ky;
        for (int kx = 0; kx < ksize; ++kx) {
          int ix = ox * stride - pad + kx;
          if (iy < 0 || iy >= in_h || ix < 0 || ix >= in_w) {
            idx += ch;
          } else {
            T* dst = din.data.data() + (static_cast<size_t>(iy) * in_w + ix) * ch;
            for (int c = 0; c < ch; ++c) dst[c] += row[idx++];
          }
        }
      }
    }
  }
}

// Forward one conv layer: conv -> bias -> (relu) -> (2x2 max pool).
template <typename T>
TensorT<T> conv_layer_forward(const ConvLayerT<T>& layer, const TensorT<T>& in,
                              ConvCacheT<T>* cache) {
  int out_h = 0, out_w = 0;
  TensorT<T> cols;
  im2col(in, layer.ksize, layer.stride, layer.pad, cols, out_h, out_w);
  if (out_h < 1 || out_w < 1) throw ImageTooSmall("feature map collapsed in conv layer");

  TensorT<T> pre({out_h, out_w, layer.out_ch});
  matmul_nt(cols.data.data(), layer.w.data.data(), pre.data.data(),
            static_cast<size_t>(out_h) * out_w, cols.shape[1], layer.out_ch);

  std::vector<uint8_t> mask;
  if (layer.relu) mask.assign(pre.numel(), 0);
  const size_t positions = static_cast<size_t>(out_h) * out_w;
  parallel_for(positions, [&](size_t p) {
    T* row = pre.data.data() + p * layer.out_ch;
    for (int oc = 0; oc < layer.out_ch; ++oc) {
      T v = row[oc] + layer.b[static_cast<size_t>(oc)];
      if (layer.relu) {
        uint8_t on = v > T(0);
        mask[p * layer.out_ch + oc] = on;
        v = on ? v : T(0);
      }
      row[oc] = v;
    }
  });

  if (cache) {
    cache->cols = std::move(cols);
    cache->relu_mask = std::move(mask);
    cache->pre_h = out_h;
    cache->pre_w = out_w;
    cache->in_h = in.shape[0];
    cache->in_w = in.shape[1];
  }

  if (!layer.pool_after) {
    if (cache) cache->pool_argmax.clear();
    return pre;
  }

  int ph = out_h / 2, pw = out_w / 2;
  if (ph < 1 || pw < 1) throw ImageTooSmall("feature map collapsed in max pool");
  TensorT<T> pooled({ph, pw, layer.out_ch});
  std::vector<int> argmax(pooled.numel());
  for (int y = 0; y < ph; ++y) {
    for (int x = 0; x < pw; ++x) {
      for (int oc = 0; oc < layer.out_ch; ++oc) {
        int best_idx = -1;
        T best = T(0);
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            int idx = ((2 * y + dy) * out_w + (2 * x + dx)) * layer.out_ch + oc;
            T v = pre.data[static_cast<size_t>(idx)];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = idx;
            }
          }
        }
        size_t oidx = (static_cast<size_t>(y) * pw + x) * layer.out_ch + oc;
        pooled.data[oidx] = best;
        argmax[oidx] = best_idx;
      }
    }
  }
  if (cache) cache->pool_argmax = std::move(argmax);
  return pooled;
}

// Backward one conv layer. dout matches the layer output; returns gradient
// w.r.t. the layer input unless skip_input_grad (layer 0).
template <typename T>
TensorT<T> conv_layer_backward(const ConvLayerT<T>& layer, const ConvCacheT<T>& cache,
                               const TensorT<T>& dout, TensorT<T>& dw, std::vector<T>& db,
                               bool skip_input_grad) {
  const int pre_h = cache.pre_h, pre_w = cache.pre_w;
  const size_t positions = static_cast<size_t>(pre_h) * pre_w;

  TensorT<T> dpre({pre_h, pre_w, layer.out_ch});
  if (layer.pool_after) {
    for (size_t i = 0; i < cache.pool_argmax.size(); ++i)
      dpre.data[static_cast<size_t>(cache.pool_argmax[i])] += dout.data[i];
  } else {
    dpre.data = dout.data;
  }
  if (layer.relu) {
    for (size_t i = 0; i < dpre.data.size(); ++i)
      if (!cache.relu_mask[i]) dpre.data[i] = T(0);
  }

  // db: one output channel per task keeps the accumulation order fixed.
  parallel_for(static_cast<size_t>(layer.out_ch), [&](size_t oc) {
    T acc = T(0);
    for (size_t p = 0; p < positions; ++p) acc += dpre.data[p * layer.out_ch + oc];
    db[oc] += acc;
  });

  // dw[oc, kidx] += sum_p dpre[p, oc] * cols[p, kidx]
  const int kk = cache.cols.shape[1];
  TensorT<T> dw_local({layer.out_ch, kk});
  matmul_tn(dpre.data.data(), cache.cols.data.data(), dw_local.data.data(),
            static_cast<size_t>(layer.out_ch), positions, static_cast<size_t>(kk));
  for (size_t i = 0; i < dw.data.size(); ++i) dw.data[i] += dw_local.data[i];

  if (skip_input_grad) return TensorT<T>();

  TensorT<T> dcols({static_cast<int>(positions), kk});
  matmul(dpre.data.data(), layer.w.data.data(), dcols.data.data(), positions,
         static_cast<size_t>(layer.out_ch), static_cast<size_t>(kk));
  TensorT<T> din({cache.in_h, cache.in_w, layer.in_ch});
  col2im_accumulate(dcols, cache.in_h, cache.in_w, layer.in_ch, layer.ksize, layer.stride,
                    layer.pad, din);
  return din;
}

template <typename T>
TensorT<T> backbone_forward_t(const NetParamsT<T>& p, const TensorT<T>& image,
                              BackboneCacheT<T>* cache) {
  if (image.shape.size() != 3 || image.shape[2] != 3)
    throw ValidationError("backbone expects an HxWx3 input");
  if (image.shape[0] < p.receptive_min() || image.shape[1] < p.receptive_min())
    throw ImageTooSmall("input smaller than the backbone receptive minimum (" +
                        std::to_string(p.receptive_min()) + " px)");
  if (cache) cache->layers.assign(p.conv.size(), {});
  TensorT<T> cur = image;
  for (size_t i = 0; i < p.conv.size(); ++i)
    cur = conv_layer_forward(p.conv[i], cur, cache ? &cache->layers[i] : nullptr);
  return cur;
}

// Needs the layer inputs to rebuild nothing: all reuse lives in the caches.
template <typename T>
void backbone_backward_t(const NetParamsT<T>& p, const BackboneCacheT<T>& cache,
                         const TensorT<T>& dfeatures, GradsT<T>& grads) {
  TensorT<T> d = dfeatures;
  for (size_t i = p.conv.size(); i-- > 0;) {
    d = conv_layer_backward(p.conv[i], cache.layers[i], d, grads.conv_w[i], grads.conv_b[i],
                            i == 0);
  }
}

// ---------------------------------------------------------------------------
// RoI pooling.
// ---------------------------------------------------------------------------

// Argmax bookkeeping for pooled features; -1 marks an empty (degenerate) cell.
struct RoiPoolIndex {
  std::vector<int> argmax;
};

// Max-pools the feature-map window covering `roi` (image coordinates,
// projected by `stride`, rounded outward) into an h x w grid. Cells are the
// floor/ceil partition, so sub-pixel cells replicate the covering pixel.
template <typename T>
std::vector<T> roi_pool_t(const TensorT<T>& featmap, const BoundingBox& roi, int stride,
                          int grid_h, int grid_w, RoiPoolIndex* index) {
  const int fh = featmap.shape[0], fw = featmap.shape[1], ch = featmap.shape[2];
  int x0 = std::clamp(static_cast<int>(std::floor(roi.x_min / stride)), 0, fw - 1);
  int y0 = std::clamp(static_cast<int>(std::floor(roi.y_min / stride)), 0, fh - 1);
  int x1 = std::clamp(static_cast<int>(std::ceil(roi.x_max / stride)), x0 + 1, fw);
  int y1 = std::clamp(static_cast<int>(std::ceil(roi.y_max / stride)), y0 + 1, fh);
  const int rh = y1 - y0, rw = x1 - x0;

  std::vector<T> out(static_cast<size_t>(grid_h) * grid_w * ch, T(0));
  if (index) index->argmax.assign(out.size(), -1);

  // Cell [g, g+1) spans floor(g*extent/grid) .. ceil((g+1)*extent/grid); a
  // cell never ends before it starts, so sub-pixel cells replicate.
  for (int gy = 0; gy < grid_h; ++gy) {
    int cy0 = y0 + (gy * rh) / grid_h;
    int cy1 = y0 + ((gy + 1) * rh + grid_h - 1) / grid_h;
    for (int gx = 0; gx < grid_w; ++gx) {
      int cx0 = x0 + (gx * rw) / grid_w;
      int cx1 = x0 + ((gx + 1) * rw + grid_w - 1) / grid_w;
      for (int c = 0; c < ch; ++c) {
        int best_idx = -1;
        T best = T(0);
        for (int y = cy0; y < cy1; ++y) {
          for (int x = cx0; x < cx1; ++x) {
            int idx = (y * fw + x) * ch + c;
            T v = featmap.data[static_cast<size_t>(idx)];
            if (best_idx < 0 || v > best) {
              best = v;
              best_idx = idx;
            }
          }
        }
        size_t oidx = (static_cast<size_t>(gy) * grid_w + gx) * ch + c;
        out[oidx] = best;
        if (index) index->argmax[oidx] = best_idx;
      }
    }
  }
  return out;
}

// Concatenation of roi_pool at every pyramid level.
template <typename T>
std::vector<T> spp_pool_t(const TensorT<T>& featmap, const BoundingBox& roi, int stride,
                          const PoolingSpec& spec, RoiPoolIndex* index) {
  std::vector<T> out;
  if (index) index->argmax.clear();
  for (const auto& [h, w] : spec.levels) {
    RoiPoolIndex lvl;
    auto part = roi_pool_t(featmap, roi, stride, h, w, index ? &lvl : nullptr);
    out.insert(out.end(), part.begin(), part.end());
    if (index) index->argmax.insert(index->argmax.end(), lvl.argmax.begin(), lvl.argmax.end());
  }
  return out;
}

// Scatter pooled-feature gradients back onto the feature map.
template <typename T>
void roi_pool_backward_t(const RoiPoolIndex& index, const std::vector<T>& dpooled,
                         TensorT<T>& dfeatmap) {
  for (size_t i = 0; i < index.argmax.size(); ++i)
    if (index.argmax[i] >= 0) dfeatmap.data[static_cast<size_t>(index.argmax[i])] += dpooled[i];
}

// ---------------------------------------------------------------------------
// FC trunk and heads.
// ---------------------------------------------------------------------------

template <typename T>
std::vector<T> fc_forward(const FcLayerT<T>& fc, const std::vector<T>& x,
                          std::vector<T>* hidden = nullptr) {
  if (fc.rank > 0) {
    std::vector<T> t(static_cast<size_t>(fc.rank));
    matmul_nt(x.data(), fc.w_first.data.data(), t.data(), 1, x.size(),
              static_cast<size_t>(fc.rank));
    std::vector<T> y(fc.b.size());
    matmul_nt(t.data(), fc.w_second.data.data(), y.data(), 1, t.size(), y.size());
    for (size_t i = 0; i < y.size(); ++i) y[i] += fc.b[i];
    if (hidden) *hidden = std::move(t);
    return y;
  }
  std::vector<T> y(fc.b.size());
  matmul_nt(x.data(), fc.w.data.data(), y.data(), 1, x.size(), y.size());
  for (size_t i = 0; i < y.size(); ++i) y[i] += fc.b[i];
  return y;
}

// Dense-layer backward: accumulates dw/db, returns dx.
template <typename T>
std::vector<T> fc_backward(const FcLayerT<T>& fc, const std::vector<T>& x,
                           const std::vector<T>& dy, TensorT<T>& dw, std::vector<T>& db) {
  const size_t out = dy.size(), in = x.size();
  for (size_t o = 0; o < out; ++o) {
    db[o] += dy[o];
    T* wrow = dw.data.data() + o * in;
    T d = dy[o];
    for (size_t i = 0; i < in; ++i) wrow[i] += d * x[i];
  }
  std::vector<T> dx(in, T(0));
  for (size_t o = 0; o < out; ++o) {
    const T* wrow = fc.w.data.data() + o * in;
    T d = dy[o];
    for (size_t i = 0; i < in; ++i) dx[i] += d * wrow[i];
  }
  return dx;
}

template <typename T>
struct TrunkCacheT {
  std::vector<std::vector<T>> inputs;  // input to each trunk layer
  std::vector<std::vector<uint8_t>> masks;
  std::vector<T> out;
};

template <typename T>
std::vector<T> trunk_forward_t(const NetParamsT<T>& p, const std::vector<T>& pooled,
                               TrunkCacheT<T>* cache) {
  std::vector<T> cur = pooled;
  if (cache) {
    cache->inputs.clear();
    cache->masks.clear();
  }
  for (const auto& fc : p.trunk) {
    if (cache) cache->inputs.push_back(cur);
    cur = fc_forward(fc, cur);
    std::vector<uint8_t> mask(cur.size());
    for (size_t i = 0; i < cur.size(); ++i) {
      mask[i] = cur[i] > T(0);
      if (!mask[i]) cur[i] = T(0);
    }
    if (cache) cache->masks.push_back(std::move(mask));
  }
  if (cache) cache->out = cur;
  return cur;
}

// Backward through the trunk; dtrunk_out is the gradient at the trunk output.
// Returns the gradient at the pooled-feature input.
template <typename T>
std::vector<T> trunk_backward_t(const NetParamsT<T>& p, const TrunkCacheT<T>& cache,
                                std::vector<T> dtrunk_out, GradsT<T>& grads) {
  std::vector<T> d = std::move(dtrunk_out);
  for (size_t i = p.trunk.size(); i-- > 0;) {
    for (size_t j = 0; j < d.size(); ++j)
      if (!cache.masks[i][j]) d[j] = T(0);
    d = fc_backward(p.trunk[i], cache.inputs[i], d, grads.trunk_w[i], grads.trunk_b[i]);
  }
  return d;
}

// Softmax in double precision; probabilities sum to 1 within 1e-12.
template <typename T>
std::vector<double> softmax_probs(const std::vector<T>& logits) {
  double mx = -1e300;
  for (T v : logits) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

}  // namespace logodet
