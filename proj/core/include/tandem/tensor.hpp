#ifndef TANDEM_TENSOR_HPP_
#define TANDEM_TENSOR_HPP_

#include <cstdint>
#include <initializer_list>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/rng.hpp"

namespace tandem {

// Dense row-major tensor of 64-bit reals. Most of the graph machinery
// treats tensors as matrices [rows, cols]; scalars are [1, 1].
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::initializer_list<int> s) : shape(s) { data.assign(size_of(shape), 0.0); }
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) { data.assign(size_of(shape), 0.0); }

  static int64_t size_of(const std::vector<int>& s);

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor full(std::vector<int> s, double v);
  static Tensor scalar(double v);
  static Tensor row(std::vector<double> v);
  // entries ~ N(0, stddev^2)
  static Tensor randn(std::vector<int> s, Rng& rng, double stddev = 1.0);

  int64_t size() const { return static_cast<int64_t>(data.size()); }
  int rows() const { return shape.empty() ? 1 : shape[0]; }
  int cols() const;

  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  bool all_finite() const;
  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

// C = alpha * op(A) * op(B), shapes already validated by the caller.
void matmul(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b,
            Tensor& out, double alpha = 1.0, bool accumulate = false);

}  // namespace tandem

#endif  // TANDEM_TENSOR_HPP_
