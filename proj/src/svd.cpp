#include "logodet/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "logodet/error.hpp"

namespace logodet {

namespace {

// One-sided Jacobi on the columns of G (rows x cols, rows >= cols): rotate
// column pairs until all are orthogonal, then read off singular values as
// column norms. V accumulates the rotations.
SvdResult jacobi_tall(std::vector<double> g, int rows, int cols) {
  std::vector<double> v(static_cast<size_t>(cols) * cols, 0.0);
  for (int i = 0; i < cols; ++i) v[static_cast<size_t>(i) * cols + i] = 1.0;

  auto col = [&](std::vector<double>& m, int stride, int j, int i) -> double& {
    return m[static_cast<size_t>(i) * stride + j];
  };

  const double eps = 1e-14;
  for (int sweep = 0; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double alpha = 0, beta = 0, gamma = 0;
        for (int i = 0; i < rows; ++i) {
          double gp = col(g, cols, p, i), gq = col(g, cols, q, i);
          alpha += gp * gp;
          beta += gq * gq;
          gamma += gp * gq;
        }
        off = std::max(off, std::abs(gamma) / std::max(std::sqrt(alpha * beta), 1e-300));
        if (std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;

        double zeta = (beta - alpha) / (2.0 * gamma);
        double t = (zeta >= 0 ? 1.0 : -1.0) /
                   (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (int i = 0; i < rows; ++i) {
          double gp = col(g, cols, p, i), gq = col(g, cols, q, i);
          col(g, cols, p, i) = c * gp - s * gq;
          col(g, cols, q, i) = s * gp + c * gq;
        }
        for (int i = 0; i < cols; ++i) {
          double vp = col(v, cols, p, i), vq = col(v, cols, q, i);
          col(v, cols, p, i) = c * vp - s * vq;
          col(v, cols, q, i) = s * vp + c * vq;
        }
      }
    }
    if (off < 1e-13) break;
  }

  std::vector<double> sigma(static_cast<size_t>(cols));
  for (int j = 0; j < cols; ++j) {
    double norm = 0.0;
    for (int i = 0; i < rows; ++i) norm += col(g, cols, j, i) * col(g, cols, j, i);
    sigma[static_cast<size_t>(j)] = std::sqrt(norm);
  }

  // Descending singular values; remember the column permutation.
  std::vector<int> order(static_cast<size_t>(cols));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (sigma[static_cast<size_t>(a)] != sigma[static_cast<size_t>(b)])
      return sigma[static_cast<size_t>(a)] > sigma[static_cast<size_t>(b)];
    return a < b;
  });

  SvdResult r;
  r.rows = rows;
  r.cols = cols;
  r.rank = cols;
  r.s.resize(static_cast<size_t>(cols));
  r.u.assign(static_cast<size_t>(rows) * cols, 0.0);
  r.v.assign(static_cast<size_t>(cols) * cols, 0.0);
  for (int k = 0; k < cols; ++k) {
    int j = order[static_cast<size_t>(k)];
    double sv = sigma[static_cast<size_t>(j)];
    r.s[static_cast<size_t>(k)] = sv;
    double inv = sv > 1e-300 ? 1.0 / sv : 0.0;
    for (int i = 0; i < rows; ++i)
      r.u[static_cast<size_t>(i) * cols + k] = col(g, cols, j, i) * inv;
    for (int i = 0; i < cols; ++i)
      r.v[static_cast<size_t>(i) * cols + k] = col(v, cols, j, i);
  }
  return r;
}

}  // namespace

SvdResult svd_decompose(const std::vector<double>& a, int rows, int cols) {
  if (rows < 1 || cols < 1 || a.size() != static_cast<size_t>(rows) * cols)
    throw ValidationError("svd_decompose: bad matrix dimensions");
  if (rows >= cols) return jacobi_tall(a, rows, cols);

  // Wide matrix: decompose the transpose and swap factors.
  std::vector<double> at(static_cast<size_t>(cols) * rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      at[static_cast<size_t>(j) * rows + i] = a[static_cast<size_t>(i) * cols + j];
  SvdResult t = jacobi_tall(at, cols, rows);
  SvdResult r;
  r.rows = rows;
  r.cols = cols;
  r.rank = t.rank;
  r.s = t.s;
  r.u = t.v;  // (rows x rank)
  r.v = t.u;  // (cols x rank)
  return r;
}

CompressedLayer compress_fc(const Tensor& w, const std::vector<float>& bias, int rank) {
  if (w.shape.size() != 2) throw ValidationError("compress_fc: weight must be a matrix");
  const int u = w.shape[0], v = w.shape[1];
  if (rank < 1 || rank > std::min(u, v))
    throw RankOutOfRange("compress_fc: rank " + std::to_string(rank) +
                         " outside [1, min(u,v)=" + std::to_string(std::min(u, v)) + "]");

  std::vector<double> a(w.data.begin(), w.data.end());
  SvdResult svd = svd_decompose(a, u, v);

  CompressedLayer c;
  c.rank = rank;
  c.bias = bias;
  c.first = Tensor({rank, v});
  c.second = Tensor({u, rank});
  for (int t = 0; t < rank; ++t) {
    double sv = svd.s[static_cast<size_t>(t)];
    for (int j = 0; j < v; ++j)
      c.first.data[static_cast<size_t>(t) * v + j] =
          static_cast<float>(sv * svd.v[static_cast<size_t>(j) * svd.rank + t]);
    for (int i = 0; i < u; ++i)
      c.second.data[static_cast<size_t>(i) * rank + t] =
          static_cast<float>(svd.u[static_cast<size_t>(i) * svd.rank + t]);
  }
  return c;
}

uint64_t fc_flops(int u, int v) {
  if (u < 1 || v < 1) throw ValidationError("fc_flops: dims must be positive");
  return static_cast<uint64_t>(u) * static_cast<uint64_t>(v);
}

uint64_t compressed_flops(int u, int v, int t) {
  if (u < 1 || v < 1 || t < 1) throw ValidationError("compressed_flops: dims must be positive");
  return static_cast<uint64_t>(t) * (static_cast<uint64_t>(u) + static_cast<uint64_t>(v));
}

int rank_for_energy(const std::vector<double>& singular_values, double fraction) {
  if (singular_values.empty()) throw ValidationError("rank_for_energy: empty spectrum");
  if (!(fraction > 0 && fraction <= 1))
    throw ValidationError("rank_for_energy: fraction must be in (0,1]");
  double total = 0.0;
  for (double s : singular_values) total += s * s;
  if (total <= 0) return 1;
  double acc = 0.0;
  for (size_t t = 0; t < singular_values.size(); ++t) {
    acc += singular_values[t] * singular_values[t];
    if (acc >= fraction * total - 1e-12) return static_cast<int>(t) + 1;
  }
  return static_cast<int>(singular_values.size());
}

NetworkParams compress_network(const NetworkParams& params, const RankSpec& spec) {
  NetworkParams out = params;
  for (auto& fc : out.trunk) {
    if (fc.rank > 0) throw ValidationError("compress_network: layer already factored");
    const int u = fc.w.shape[0], v = fc.w.shape[1];
    int rank = spec.rank;
    if (rank == 0 && spec.energy > 0) {
      std::vector<double> a(fc.w.data.begin(), fc.w.data.end());
      rank = rank_for_energy(svd_decompose(a, u, v).s, spec.energy);
    } else if (rank == 0 && spec.fraction > 0) {
      rank = std::max(1, static_cast<int>(std::lround(spec.fraction * std::min(u, v))));
    }
    if (rank == 0) throw ConfigError("compress_network: no rank specified");
    rank = std::min(rank, std::min(u, v));
    CompressedLayer c = compress_fc(fc.w, fc.b, rank);
    fc.rank = c.rank;
    fc.w_first = std::move(c.first);
    fc.w_second = std::move(c.second);
    fc.w = Tensor();
  }
  return out;
}

double reconstruction_error(const CompressedLayer& c, const Tensor& w) {
  const int u = w.shape[0], v = w.shape[1];
  const int t = c.rank;
  double err = 0.0, norm = 0.0;
  for (int i = 0; i < u; ++i) {
    for (int j = 0; j < v; ++j) {
      double rec = 0.0;
      for (int k = 0; k < t; ++k)
        rec += static_cast<double>(c.second.data[static_cast<size_t>(i) * t + k]) *
               static_cast<double>(c.first.data[static_cast<size_t>(k) * v + j]);
      double orig = w.data[static_cast<size_t>(i) * v + j];
      err += (rec - orig) * (rec - orig);
      norm += orig * orig;
    }
  }
  return norm > 0 ? std::sqrt(err / norm) : std::sqrt(err);
}

}  // namespace logodet
