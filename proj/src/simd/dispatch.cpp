#include <atomic>
#include <cstdlib>
#include <string>

#include "rlatent/error.hpp"
#include "rlatent/simd/kernels.hpp"

namespace rlatent::simd {

#if defined(RLATENT_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(RLATENT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& pick_default() {
  if (const char* env = std::getenv("RIEMANN_LATENT_SIMD"); env != nullptr && *env != '\0') {
    const Backend wanted = parse_backend(env);
    if (wanted == Backend::kScalar) return scalar_kernels();
    if (const KernelTable* t = avx2_kernels()) return *t;
    log_warning("RIEMANN_LATENT_SIMD=avx2 requested but unavailable; using scalar kernels");
    return scalar_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return *t;
  return scalar_kernels();
}

std::atomic<const KernelTable*>& slot() {
  static std::atomic<const KernelTable*> current{&pick_default()};
  return current;
}

}  // namespace

const KernelTable* avx2_kernels() {
#if defined(RLATENT_HAVE_AVX2)
  static const bool ok = cpu_has_avx2();
  return ok ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable& active() { return *slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (backend == Backend::kScalar) {
    slot().store(&scalar_kernels());
    return;
  }
  const KernelTable* t = avx2_kernels();
  if (t == nullptr) throw ValidationError("AVX2 kernels are not available on this machine");
  slot().store(t);
}

Backend parse_backend(std::string_view name) {
  if (name == "scalar") return Backend::kScalar;
  if (name == "avx2") return Backend::kAvx2;
  throw ValidationError("unknown SIMD backend '" + std::string(name) + "' (expected scalar|avx2)");
}

}  // namespace rlatent::simd
