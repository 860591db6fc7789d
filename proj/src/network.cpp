#include "logodet/network.hpp"

#include <cmath>

#include "logodet/rng.hpp"

namespace logodet {

namespace {

void fill_gaussian(std::vector<float>& v, double stdev, Rng& rng) {
  for (float& x : v) x = static_cast<float>(rng.next_gaussian() * stdev);
}

FcLayer make_fc(int out, int in, double stdev, Rng& rng) {
  FcLayer fc;
  fc.w = Tensor({out, in});
  fill_gaussian(fc.w.data, stdev, rng);
  fc.b.assign(static_cast<size_t>(out), 0.0f);
  return fc;
}

}  // namespace

NetworkParams init_network(const ArchConfig& arch, int num_classes, uint64_t seed) {
  if (num_classes < 1) throw ValidationError("init_network: num_classes must be >= 1");
  if (arch.conv_channels.empty() || arch.trunk_widths.empty())
    throw ValidationError("init_network: empty layer stack");

  NetworkParams p;
  p.num_classes = num_classes;
  p.mode = arch.mode;
  p.pooling = arch.pooling;

  uint64_t layer_tag = 0;
  int in_ch = 3;
  for (int out_ch : arch.conv_channels) {
    ConvLayer c;
    c.in_ch = in_ch;
    c.out_ch = out_ch;
    c.ksize = arch.conv_ksize;
    c.stride = arch.conv_stride;
    c.pad = arch.conv_ksize / 2;
    c.pool_after = arch.pool_after_conv;
    c.relu = arch.relu;
    c.w = Tensor({out_ch, c.ksize * c.ksize * in_ch});
    Rng rng = stream_rng(seed, layer_tag++);
    fill_gaussian(c.w.data, std::sqrt(2.0 / (c.ksize * c.ksize * in_ch)), rng);
    c.b.assign(static_cast<size_t>(out_ch), 0.0f);
    p.conv.push_back(std::move(c));
    in_ch = out_ch;
  }

  int dim = p.fc_input_dim();
  for (int width : arch.trunk_widths) {
    Rng rng = stream_rng(seed, layer_tag++);
    p.trunk.push_back(make_fc(width, dim, std::sqrt(2.0 / dim), rng));
    dim = width;
  }

  Rng cls_rng = stream_rng(seed, layer_tag++);
  p.cls_head = make_fc(num_classes + 1, dim, 0.01, cls_rng);
  Rng bbox_rng = stream_rng(seed, layer_tag++);
  p.bbox_head = make_fc(4 * num_classes, dim, 0.001, bbox_rng);

  p.validate();
  return p;
}

Tensor image_to_tensor(const Image& img) {
  Tensor t({img.height, img.width, 3});
  for (size_t i = 0; i < img.data.size(); ++i)
    t.data[i] = static_cast<float>(img.data[i]) / 255.0f - 0.5f;
  return t;
}

Tensor forward_backbone(const NetworkParams& params, const Tensor& image, BackboneCache* cache) {
  return backbone_forward_t(params, image, cache);
}

std::vector<float> roi_pool(const Tensor& featmap, const BoundingBox& roi, int stride,
                            int grid_h, int grid_w, RoiPoolIndex* index) {
  if (!roi.valid()) throw ValidationError("roi_pool: invalid roi");
  if (grid_h < 1 || grid_w < 1) throw ValidationError("roi_pool: grid must be positive");
  return roi_pool_t(featmap, roi, stride, grid_h, grid_w, index);
}

std::vector<float> spp_pool(const Tensor& featmap, const BoundingBox& roi, int stride,
                            const PoolingSpec& spec, RoiPoolIndex* index) {
  if (!roi.valid()) throw ValidationError("spp_pool: invalid roi");
  return spp_pool_t(featmap, roi, stride, spec, index);
}

HeadOutput head_forward(const NetworkParams& params, const std::vector<float>& pooled) {
  if (static_cast<int>(pooled.size()) != params.fc_input_dim())
    throw ValidationError("head_forward: pooled feature length mismatch");
  std::vector<float> trunk_out = trunk_forward_t<float>(params, pooled, nullptr);
  std::vector<float> logits = fc_forward(params.cls_head, trunk_out);
  std::vector<float> offsets = fc_forward(params.bbox_head, trunk_out);
  HeadOutput out;
  out.class_probs = softmax_probs(logits);
  out.offsets.assign(offsets.begin(), offsets.end());
  return out;
}

int warp_side(const NetworkParams& params) {
  return params.stride() * std::max(params.pooling.max_h(), params.pooling.max_w());
}

namespace {

// Undo target normalization so offsets live in raw bbox_encode space.
std::vector<double> denormalize_offsets(const NetworkParams& p,
                                        const std::vector<double>& offsets) {
  std::vector<double> out(offsets.size());
  for (size_t i = 0; i < offsets.size(); ++i) {
    size_t k = i % 4;
    out[i] = offsets[i] * p.target_std[k] + p.target_mean[k];
  }
  return out;
}

RoiOutput finish_roi(const NetworkParams& p, const HeadOutput& head) {
  RoiOutput out;
  out.class_probs = head.class_probs;
  out.offsets = denormalize_offsets(p, head.offsets);
  return out;
}

}  // namespace

std::vector<RoiOutput> detect_image(const NetworkParams& params, const Image& image,
                                    const std::vector<BoundingBox>& proposals,
                                    DetectStats* stats) {
  params.validate();
  std::vector<RoiOutput> out(proposals.size());

  if (params.mode == PipelineMode::kSharedMap) {
    Tensor featmap = forward_backbone(params, image_to_tensor(image), nullptr);
    if (stats) stats->backbone_passes += 1;
    parallel_for(proposals.size(), [&](size_t i) {
      auto pooled = spp_pool_t(featmap, proposals[i], params.stride(), params.pooling, nullptr);
      out[i] = finish_roi(params, head_forward(params, pooled));
    });
    return out;
  }

  const int side = warp_side(params);
  // One backbone pass per region; parallel across regions, each computed whole.
  std::vector<int> passes(proposals.size(), 0);
  parallel_for(proposals.size(), [&](size_t i) {
    Image patch = warp_region_image(image, proposals[i], side, side);
    Tensor t = image_to_tensor(patch);
    Tensor featmap = backbone_forward_t<float>(params, t, nullptr);
    passes[i] = 1;
    BoundingBox whole{0.0, 0.0, static_cast<double>(side), static_cast<double>(side)};
    auto pooled = spp_pool_t(featmap, whole, params.stride(), params.pooling, nullptr);
    out[i] = finish_roi(params, head_forward(params, pooled));
  });
  if (stats)
    for (int p : passes) stats->backbone_passes += p;
  return out;
}

size_t count_parameters(const NetworkParams& params) {
  size_t n = 0;
  for (const auto& c : params.conv) n += c.w.numel() + c.b.size();
  auto fc_count = [](const FcLayer& fc) {
    size_t k = fc.b.size();
    if (fc.rank > 0) return k + fc.w_first.numel() + fc.w_second.numel();
    return k + fc.w.numel();
  };
  for (const auto& f : params.trunk) n += fc_count(f);
  n += fc_count(params.cls_head) + fc_count(params.bbox_head);
  return n;
}

}  // namespace logodet
