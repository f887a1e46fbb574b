#include "rlatent/simd/kernels.hpp"

namespace rlatent::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot4(const double* rows, std::size_t stride, const double* x, std::size_t n, double* out) {
  for (int r = 0; r < 4; ++r) out[r] = dot(rows + r * stride, x, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_sq_accumulate(double* q, const double* w, const double* mu, double z,
                            std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double r = z - mu[i];
    q[i] += w[i] * r * r;
  }
}

double weighted_residual_dot(const double* c, const double* w, const double* mu, double z,
                             std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += c[i] * w[i] * (z - mu[i]);
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Backend::kScalar, "scalar", dot, dot4, axpy,
                                 weighted_sq_accumulate, weighted_residual_dot};
  return table;
}

}  // namespace rlatent::simd
