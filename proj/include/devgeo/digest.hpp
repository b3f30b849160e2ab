#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace devgeo {

inline constexpr int kDigestBits = 256;

/// 256-bit Nilsimsa digest. Byte 0 is the most significant byte of the hex
/// form; bucket b lives in bytes[31 - b / 8], bit b % 8.
struct StructuralDigest {
  std::array<std::uint8_t, 32> bytes{};

  bool bucket_bit(int bucket) const { return (bytes[31 - bucket / 8] >> (bucket % 8)) & 1U; }

  /// 64 lowercase hex characters.
  std::string to_hex() const;
  static std::optional<StructuralDigest> from_hex(std::string_view hex);

  friend bool operator==(const StructuralDigest&, const StructuralDigest&) = default;
};

static_assert(sizeof(StructuralDigest) == 32);

StructuralDigest nilsimsa_digest(std::string_view data);

int hamming_distance(const StructuralDigest& a, const StructuralDigest& b);

/// Distances from `query` to every digest in `digests`, written to `out`
/// (which must be at least as long).
void hamming_distances(const StructuralDigest& query, std::span<const StructuralDigest> digests,
                       std::span<std::uint16_t> out);

inline double similarity_from_distance(int d) {
  return static_cast<double>(kDigestBits - d) / kDigestBits;
}

inline double similarity(const StructuralDigest& a, const StructuralDigest& b) {
  return similarity_from_distance(hamming_distance(a, b));
}

}  // namespace devgeo
