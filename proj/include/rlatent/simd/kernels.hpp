#pragma once

// Data-parallel inner loops shared by the metric evaluation and the VAE.
//
// Every kernel has a scalar reference implementation and, on x86-64, an
// AVX2+FMA variant. The active table is chosen once at startup from cpuid and
// can be pinned with RIEMANN_LATENT_SIMD=scalar|avx2 or set_backend().
// Variants agree to rounding (reduction order differs), not bit-for-bit, so a
// given run is reproducible only under a fixed backend.

#include <cstddef>
#include <string_view>

namespace rlatent::simd {

enum class Backend { kScalar, kAvx2 };

struct KernelTable {
  Backend backend;
  const char* name;

  /// sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  /// out[r] = dot(rows + r * stride, x, n) for r in 0..3
  void (*dot4)(const double* rows, std::size_t stride, const double* x, std::size_t n, double* out);

  /// y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  /// q[i] += w[i] * (z - mu[i])^2
  void (*weighted_sq_accumulate)(double* q, const double* w, const double* mu, double z,
                                 std::size_t n);

  /// sum_i c[i] * w[i] * (z - mu[i])
  double (*weighted_residual_dot)(const double* c, const double* w, const double* mu, double z,
                                  std::size_t n);
};

const KernelTable& scalar_kernels();

/// nullptr when the CPU or the build lacks AVX2/FMA.
const KernelTable* avx2_kernels();

const KernelTable& active();

/// Pins the backend for the rest of the process. Throws ValidationError when
/// the requested backend is unavailable.
void set_backend(Backend backend);

Backend parse_backend(std::string_view name);

}  // namespace rlatent::simd
