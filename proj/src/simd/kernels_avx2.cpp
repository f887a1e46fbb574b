// Compiled with -mavx2 -mfma. Nothing here may run before dispatch has
// confirmed CPU support.

#include <immintrin.h>

#include "rlatent/simd/kernels.hpp"

namespace rlatent::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void dot4(const double* rows, std::size_t stride, const double* x, std::size_t n, double* out) {
  const double* r0 = rows;
  const double* r1 = rows + stride;
  const double* r2 = rows + 2 * stride;
  const double* r3 = rows + 3 * stride;
  __m256d a0 = _mm256_setzero_pd();
  __m256d a1 = _mm256_setzero_pd();
  __m256d a2 = _mm256_setzero_pd();
  __m256d a3 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    a0 = _mm256_fmadd_pd(_mm256_loadu_pd(r0 + i), xv, a0);
    a1 = _mm256_fmadd_pd(_mm256_loadu_pd(r1 + i), xv, a1);
    a2 = _mm256_fmadd_pd(_mm256_loadu_pd(r2 + i), xv, a2);
    a3 = _mm256_fmadd_pd(_mm256_loadu_pd(r3 + i), xv, a3);
  }
  double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
  for (; i < n; ++i) {
    s0 += r0[i] * x[i];
    s1 += r1[i] * x[i];
    s2 += r2[i] * x[i];
    s3 += r3[i] * x[i];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void weighted_sq_accumulate(double* q, const double* w, const double* mu, double z,
                            std::size_t n) {
  const __m256d zv = _mm256_set1_pd(z);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_sub_pd(zv, _mm256_loadu_pd(mu + i));
    const __m256d wr = _mm256_mul_pd(_mm256_loadu_pd(w + i), r);
    _mm256_storeu_pd(q + i, _mm256_fmadd_pd(wr, r, _mm256_loadu_pd(q + i)));
  }
  for (; i < n; ++i) {
    const double r = z - mu[i];
    q[i] += w[i] * r * r;
  }
}

double weighted_residual_dot(const double* c, const double* w, const double* mu, double z,
                             std::size_t n) {
  const __m256d zv = _mm256_set1_pd(z);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d r = _mm256_sub_pd(zv, _mm256_loadu_pd(mu + i));
    const __m256d cw = _mm256_mul_pd(_mm256_loadu_pd(c + i), _mm256_loadu_pd(w + i));
    acc = _mm256_fmadd_pd(cw, r, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += c[i] * w[i] * (z - mu[i]);
  return s;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{Backend::kAvx2, "avx2", dot, dot4, axpy,
                                 weighted_sq_accumulate, weighted_residual_dot};
  return table;
}

}  // namespace rlatent::simd
