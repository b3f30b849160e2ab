#include <bit>
#include <cstring>

#include "devgeo/simd/hamming.hpp"

namespace devgeo::simd {

int hamming256_scalar(const std::uint8_t* a, const std::uint8_t* b) {
  int total = 0;
  for (int lane = 0; lane < 4; ++lane) {
    std::uint64_t x = 0;
    std::uint64_t y = 0;
    std::memcpy(&x, a + lane * 8, 8);
    std::memcpy(&y, b + lane * 8, 8);
    total += std::popcount(x ^ y);
  }
  return total;
}

void hamming256_batch_scalar(const std::uint8_t* query, const std::uint8_t* digests, std::size_t count,
                             std::uint16_t* out) {
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = static_cast<std::uint16_t>(hamming256_scalar(query, digests + i * 32));
  }
}

}  // namespace devgeo::simd
