#pragma once

#include <cstdint>
#include <vector>

#include "logodet/network.hpp"

namespace logodet {

// Thin SVD of a dense row-major u x v matrix: A = U diag(S) V^T with
// singular values descending. U is u x r and V is v x r, r = min(u,v).
struct SvdResult {
  std::vector<double> u;
  std::vector<double> s;
  std::vector<double> v;
  int rows = 0, cols = 0, rank = 0;
};

// One-sided Jacobi in double precision; accurate enough for desk-scale FC
// matrices (a few hundred by a few thousand).
SvdResult svd_decompose(const std::vector<double>& a, int rows, int cols);

struct CompressedLayer {
  Tensor first;   // t x v: diag(S_t) V_t^T
  Tensor second;  // u x t: U_t
  std::vector<float> bias;
  int rank = 0;
};

// Top-t singular triplets of a dense u x v weight matrix; bias carries over
// unchanged and applies after the second factor.
CompressedLayer compress_fc(const Tensor& w, const std::vector<float>& bias, int rank);

// Multiply-accumulate counts for a dense layer and its factored form.
uint64_t fc_flops(int u, int v);
uint64_t compressed_flops(int u, int v, int t);

// Smallest rank whose leading singular values hold at least `fraction` of
// the total spectral energy (sum of squares).
int rank_for_energy(const std::vector<double>& singular_values, double fraction);

// How the compression rank is chosen per layer.
struct RankSpec {
  int rank = 0;           // absolute rank; used when > 0
  double energy = 0.0;    // spectral-energy fraction in (0,1]; used when rank == 0
  double fraction = 0.0;  // fraction of min(u,v) in (0,1]; used when others unset
};

// Factor every dense FC trunk layer; heads stay dense. Inference through
// factored layers runs first then second, which is the whole saving.
NetworkParams compress_network(const NetworkParams& params, const RankSpec& spec);

// Frobenius reconstruction error ||second*first - W||_F / ||W||_F.
double reconstruction_error(const CompressedLayer& c, const Tensor& w);

}  // namespace logodet
