#include <immintrin.h>

#include "devgeo/simd/hamming.hpp"

namespace devgeo::simd {

namespace {

// Nibble-table popcount, summed per 64-bit lane.
inline __m256i popcount_lanes(__m256i v) {
  const __m256i table = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4,  //
                                         0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4);
  const __m256i low_mask = _mm256_set1_epi8(0x0f);
  const __m256i lo = _mm256_and_si256(v, low_mask);
  const __m256i hi = _mm256_and_si256(_mm256_srli_epi16(v, 4), low_mask);
  const __m256i counts = _mm256_add_epi8(_mm256_shuffle_epi8(table, lo), _mm256_shuffle_epi8(table, hi));
  return _mm256_sad_epu8(counts, _mm256_setzero_si256());
}

inline int horizontal_sum(__m256i lanes) {
  const __m128i sum = _mm_add_epi64(_mm256_castsi256_si128(lanes), _mm256_extracti128_si256(lanes, 1));
  return static_cast<int>(_mm_cvtsi128_si64(sum) + _mm_extract_epi64(sum, 1));
}

}  // namespace

int hamming256_avx2(const std::uint8_t* a, const std::uint8_t* b) {
  const __m256i va = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(a));
  const __m256i vb = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(b));
  return horizontal_sum(popcount_lanes(_mm256_xor_si256(va, vb)));
}

void hamming256_batch_avx2(const std::uint8_t* query, const std::uint8_t* digests, std::size_t count,
                           std::uint16_t* out) {
  const __m256i q = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(query));
  std::size_t i = 0;
  // four digests per iteration keeps the shuffle ports busy
  for (; i + 4 <= count; i += 4) {
    const std::uint8_t* base = digests + i * 32;
    const __m256i c0 = popcount_lanes(_mm256_xor_si256(q, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(base))));
    const __m256i c1 =
        popcount_lanes(_mm256_xor_si256(q, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(base + 32))));
    const __m256i c2 =
        popcount_lanes(_mm256_xor_si256(q, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(base + 64))));
    const __m256i c3 =
        popcount_lanes(_mm256_xor_si256(q, _mm256_loadu_si256(reinterpret_cast<const __m256i*>(base + 96))));
    out[i] = static_cast<std::uint16_t>(horizontal_sum(c0));
    out[i + 1] = static_cast<std::uint16_t>(horizontal_sum(c1));
    out[i + 2] = static_cast<std::uint16_t>(horizontal_sum(c2));
    out[i + 3] = static_cast<std::uint16_t>(horizontal_sum(c3));
  }
  for (; i < count; ++i) out[i] = static_cast<std::uint16_t>(hamming256_avx2(query, digests + i * 32));
}

}  // namespace devgeo::simd
