#pragma once

#include <cstddef>

#include "logodet/parallel.hpp"

namespace logodet {

// Row-major matrix products. Every output element is accumulated by a single
// thread in a fixed k-order, so results are bit-identical for any thread
// count.

// C[m x n] = A[m x k] * B[k x n]
template <typename T>
void matmul(const T* A, const T* B, T* C, size_t m, size_t k, size_t n) {
  parallel_for(m, [&](size_t i) {
    T* crow = C + i * n;
    for (size_t j = 0; j < n; ++j) crow[j] = T(0);
    const T* arow = A + i * k;
    for (size_t kk = 0; kk < k; ++kk) {
      T a = arow[kk];
      if (a == T(0)) continue;
      const T* brow = B + kk * n;
      for (size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  });
}

// C[m x n] = A[m x k] * B[n x k]^T
template <typename T>
void matmul_nt(const T* A, const T* B, T* C, size_t m, size_t k, size_t n) {
  parallel_for(m, [&](size_t i) {
    const T* arow = A + i * k;
    T* crow = C + i * n;
    for (size_t j = 0; j < n; ++j) {
      const T* brow = B + j * k;
      T acc = T(0);
      for (size_t kk = 0; kk < k; ++kk) acc += arow[kk] * brow[kk];
      crow[j] = acc;
    }
  });
}

// C[m x n] = A[k x m]^T * B[k x n]
template <typename T>
void matmul_tn(const T* A, const T* B, T* C, size_t m, size_t k, size_t n) {
  parallel_for(m, [&](size_t i) {
    T* crow = C + i * n;
    for (size_t j = 0; j < n; ++j) crow[j] = T(0);
    for (size_t kk = 0; kk < k; ++kk) {
      T a = A[kk * m + i];
      if (a == T(0)) continue;
      const T* brow = B + kk * n;
      for (size_t j = 0; j < n; ++j) crow[j] += a * brow[j];
    }
  });
}

}  // namespace logodet
