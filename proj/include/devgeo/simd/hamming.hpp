#pragma once

// Hamming-distance kernels over 256-bit digests. Every variant computes the
// same integer result; `active_kernels()` picks the widest one the running
// CPU supports. Set DEVGEO_SIMD=scalar to force the portable path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace devgeo::simd {

enum class Isa { kScalar, kAvx2 };

using HammingOneFn = int (*)(const std::uint8_t* a, const std::uint8_t* b);
// `digests` holds `count` consecutive 32-byte digests.
using HammingBatchFn = void (*)(const std::uint8_t* query, const std::uint8_t* digests, std::size_t count,
                                std::uint16_t* out);

struct HammingKernels {
  Isa isa;
  HammingOneFn one;
  HammingBatchFn batch;
};

int hamming256_scalar(const std::uint8_t* a, const std::uint8_t* b);
void hamming256_batch_scalar(const std::uint8_t* query, const std::uint8_t* digests, std::size_t count,
                             std::uint16_t* out);

#if defined(DEVGEO_HAVE_AVX2)
int hamming256_avx2(const std::uint8_t* a, const std::uint8_t* b);
void hamming256_batch_avx2(const std::uint8_t* query, const std::uint8_t* digests, std::size_t count,
                           std::uint16_t* out);
#endif

bool cpu_supports(Isa isa);

/// Kernels for a specific ISA, or nullptr when not compiled in or not
/// supported by this CPU.
const HammingKernels* kernels_for(Isa isa);

const HammingKernels& active_kernels();

std::string_view isa_name(Isa isa);

}  // namespace devgeo::simd
