#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <vector>

namespace logodet {

// Dense row-major tensor. Feature maps use [H, W, C] layout so the channel
// axis is contiguous.
template <typename T>
struct TensorT {
  std::vector<int> shape;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int> s) : shape(std::move(s)) {
    data.assign(numel_of(shape), T(0));
  }

  static size_t numel_of(const std::vector<int>& s) {
    size_t n = 1;
    for (int d : s) n *= static_cast<size_t>(d);
    return n;
  }

  size_t numel() const { return data.size(); }

  T& at3(int a, int b, int c) {
    return data[(static_cast<size_t>(a) * shape[1] + b) * shape[2] + c];
  }
  T at3(int a, int b, int c) const {
    return data[(static_cast<size_t>(a) * shape[1] + b) * shape[2] + c];
  }

  T& at2(int a, int b) { return data[static_cast<size_t>(a) * shape[1] + b]; }
  T at2(int a, int b) const { return data[static_cast<size_t>(a) * shape[1] + b]; }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool operator==(const TensorT& o) const = default;
};

using Tensor = TensorT<float>;

}  // namespace logodet
