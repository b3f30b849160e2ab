#include <cstdlib>
#include <string>

#include "devgeo/simd/hamming.hpp"

namespace devgeo::simd {

namespace {

constexpr HammingKernels kScalar{Isa::kScalar, &hamming256_scalar, &hamming256_batch_scalar};
#if defined(DEVGEO_HAVE_AVX2)
constexpr HammingKernels kAvx2{Isa::kAvx2, &hamming256_avx2, &hamming256_batch_avx2};
#endif

const HammingKernels& select_kernels() {
  const char* forced = std::getenv("DEVGEO_SIMD");
  if (forced != nullptr && std::string(forced) == "scalar") return kScalar;
#if defined(DEVGEO_HAVE_AVX2)
  if (cpu_supports(Isa::kAvx2)) return kAvx2;
#endif
  return kScalar;
}

}  // namespace

bool cpu_supports(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
#if defined(DEVGEO_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("popcnt");
#else
      return false;
#endif
  }
  return false;
}

const HammingKernels* kernels_for(Isa isa) {
  if (!cpu_supports(isa)) return nullptr;
  switch (isa) {
    case Isa::kScalar:
      return &kScalar;
    case Isa::kAvx2:
#if defined(DEVGEO_HAVE_AVX2)
      return &kAvx2;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const HammingKernels& active_kernels() {
  static const HammingKernels& chosen = select_kernels();
  return chosen;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

}  // namespace devgeo::simd
