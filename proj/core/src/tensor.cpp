#include "tandem/tensor.hpp"

#include <cmath>

#ifdef TANDEM_USE_BLAS
extern "C" {
void dgemm_(const char* transa, const char* transb, const int* m, const int* n,
            const int* k, const double* alpha, const double* a, const int* lda,
            const double* b, const int* ldb, const double* beta, double* c,
            const int* ldc);
}
#endif

namespace tandem {

int64_t Tensor::size_of(const std::vector<int>& s) {
  int64_t n = 1;
  for (int d : s) {
    if (d <= 0) throw Error("Tensor: non-positive dimension");
    n *= d;
  }
  return n;
}

Tensor Tensor::full(std::vector<int> s, double v) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = v;
  return t;
}

Tensor Tensor::scalar(double v) {
  Tensor t({1, 1});
  t.data[0] = v;
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  Tensor t({1, static_cast<int>(v.size())});
  t.data = std::move(v);
  return t;
}

Tensor Tensor::randn(std::vector<int> s, Rng& rng, double stddev) {
  Tensor t(std::move(s));
  for (auto& x : t.data) x = stddev * rng.normal();
  return t;
}

int Tensor::cols() const {
  if (shape.size() < 2) return shape.empty() ? 1 : shape[0];
  int c = 1;
  for (size_t i = 1; i < shape.size(); ++i) c *= shape[i];
  return c;
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

void matmul(const Tensor& a, bool trans_a, const Tensor& b, bool trans_b,
            Tensor& out, double alpha, bool accumulate) {
  const int m = trans_a ? a.cols() : a.rows();
  const int k = trans_a ? a.rows() : a.cols();
  const int n = trans_b ? b.rows() : b.cols();
#ifdef TANDEM_USE_BLAS
  // Row-major C = op(A)op(B) computed as column-major C^T = op(B)^T op(A)^T.
  const char ta = trans_b ? 'T' : 'N';
  const char tb = trans_a ? 'T' : 'N';
  const int lda = b.cols();
  const int ldb = a.cols();
  const int ldc = n;
  const double beta = accumulate ? 1.0 : 0.0;
  dgemm_(&ta, &tb, &n, &m, &k, &alpha, b.data.data(), &lda, a.data.data(),
         &ldb, &beta, out.data.data(), &ldc);
#else
  if (!accumulate)
    for (auto& x : out.data) x = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int p = 0; p < k; ++p) {
      const double av = alpha * (trans_a ? a.at(p, i) : a.at(i, p));
      if (av == 0.0) continue;
      const double* brow = trans_b ? nullptr : &b.data[static_cast<size_t>(p) * n];
      double* crow = &out.data[static_cast<size_t>(i) * n];
      if (trans_b) {
        for (int j = 0; j < n; ++j) crow[j] += av * b.at(j, p);
      } else {
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
#endif
}

}  // namespace tandem
