#pragma once

#include <cstdint>
#include <vector>

#include "logodet/image.hpp"
#include "logodet/nn_core.hpp"

namespace logodet {

using ConvLayer = ConvLayerT<float>;
using FcLayer = FcLayerT<float>;
using NetworkParams = NetParamsT<float>;
using Grads = GradsT<float>;
using BackboneCache = BackboneCacheT<float>;
using TrunkCache = TrunkCacheT<float>;

// Shape of a freshly initialized detector network.
struct ArchConfig {
  std::vector<int> conv_channels{16, 32, 64};
  int conv_ksize = 3;
  bool pool_after_conv = true;  // 2x2 max pool after each conv
  int conv_stride = 1;
  bool relu = true;
  std::vector<int> trunk_widths{256, 256};
  PoolingSpec pooling{{{4, 4}}};
  PipelineMode mode = PipelineMode::kSharedMap;
};

// He-style scaled Gaussian init for conv/trunk, small Gaussians for the heads.
NetworkParams init_network(const ArchConfig& arch, int num_classes, uint64_t seed);

// Image pixels to network input: v/255 - 0.5 per channel.
Tensor image_to_tensor(const Image& img);

Tensor forward_backbone(const NetworkParams& params, const Tensor& image,
                        BackboneCache* cache = nullptr);

std::vector<float> roi_pool(const Tensor& featmap, const BoundingBox& roi, int stride,
                            int grid_h, int grid_w, RoiPoolIndex* index = nullptr);

std::vector<float> spp_pool(const Tensor& featmap, const BoundingBox& roi, int stride,
                            const PoolingSpec& spec, RoiPoolIndex* index = nullptr);

struct HeadOutput {
  std::vector<double> class_probs;  // length C+1, sums to 1
  std::vector<double> offsets;      // length 4C, normalized regression space
};

// FC trunk + both heads on pooled features.
HeadOutput head_forward(const NetworkParams& params, const std::vector<float>& pooled);

// Per-RoI raw network output: probabilities plus decoded-space offsets
// (normalization already undone using the stored target mean/std).
struct RoiOutput {
  std::vector<double> class_probs;
  std::vector<double> offsets;  // 4C, raw bbox_encode space
};

struct DetectStats {
  int backbone_passes = 0;
};

// Runs the detector over an image's proposals in the mode baked into params.
// Both modes produce shape-identical outputs.
std::vector<RoiOutput> detect_image(const NetworkParams& params, const Image& image,
                                    const std::vector<BoundingBox>& proposals,
                                    DetectStats* stats = nullptr);

// Side size for per-region warps: stride x largest pooling grid, so the
// warped patch pools into the same feature length as shared-map mode.
int warp_side(const NetworkParams& params);

size_t count_parameters(const NetworkParams& params);

}  // namespace logodet
