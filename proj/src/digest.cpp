#include "devgeo/digest.hpp"

#include <cassert>

#include "devgeo/simd/hamming.hpp"

namespace devgeo {

namespace {

// Byte-transition table of the original Nilsimsa generator.
constexpr std::array<std::uint8_t, 256> make_tran() {
  std::array<std::uint8_t, 256> tran{};
  int j = 0;
  for (int i = 0; i < 256; ++i) {
    j = (j * 53 + 1) & 255;
    j += j;
    if (j > 255) j -= 255;
    for (int k = 0; k < i;) {
      if (tran[k] == j) {
        j = (j + 1) & 255;
        k = 0;
      } else {
        ++k;
      }
    }
    tran[i] = static_cast<std::uint8_t>(j);
  }
  return tran;
}

constexpr auto kTran = make_tran();

static_assert(kTran[0] == 0x02 && kTran[1] == 0xD6 && kTran[2] == 0x9E && kTran[3] == 0x6F);

constexpr std::uint8_t tran3(std::uint8_t a, std::uint8_t b, std::uint8_t c, int n) {
  return static_cast<std::uint8_t>(((kTran[(a + n) & 255] ^ (kTran[b] * (n + n + 1))) + kTran[c ^ kTran[n]]) & 255);
}

}  // namespace

std::string StructuralDigest::to_hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (auto b : bytes) {
    out.push_back(kHex[b >> 4]);
    out.push_back(kHex[b & 0xF]);
  }
  return out;
}

std::optional<StructuralDigest> StructuralDigest::from_hex(std::string_view hex) {
  if (hex.size() != 64) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  StructuralDigest d;
  for (std::size_t i = 0; i < 32; ++i) {
    const int hi = nibble(hex[2 * i]);
    const int lo = nibble(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    d.bytes[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return d;
}

StructuralDigest nilsimsa_digest(std::string_view data) {
  std::array<std::uint32_t, 256> acc{};
  // w0 is the most recent previous byte
  std::uint8_t w0 = 0, w1 = 0, w2 = 0, w3 = 0;
  std::size_t count = 0;
  for (char ch : data) {
    const auto c = static_cast<std::uint8_t>(ch);
    if (count > 1) ++acc[tran3(c, w0, w1, 0)];
    if (count > 2) {
      ++acc[tran3(c, w0, w2, 1)];
      ++acc[tran3(c, w1, w2, 2)];
    }
    if (count > 3) {
      ++acc[tran3(c, w0, w3, 3)];
      ++acc[tran3(c, w1, w3, 4)];
      ++acc[tran3(c, w2, w3, 5)];
      ++acc[tran3(w3, w0, c, 6)];
      ++acc[tran3(w3, w2, c, 7)];
    }
    w3 = w2;
    w2 = w1;
    w1 = w0;
    w0 = c;
    ++count;
  }

  // Compare bucket * 256 > trigram total to stay in integers.
  std::uint64_t trigrams = 0;
  for (auto v : acc) trigrams += v;
  StructuralDigest digest;
  for (int b = 0; b < 256; ++b) {
    if (static_cast<std::uint64_t>(acc[b]) * 256 > trigrams) {
      digest.bytes[31 - b / 8] |= static_cast<std::uint8_t>(1U << (b % 8));
    }
  }
  return digest;
}

int hamming_distance(const StructuralDigest& a, const StructuralDigest& b) {
  return simd::active_kernels().one(a.bytes.data(), b.bytes.data());
}

void hamming_distances(const StructuralDigest& query, std::span<const StructuralDigest> digests,
                       std::span<std::uint16_t> out) {
  assert(out.size() >= digests.size());
  if (digests.empty()) return;
  simd::active_kernels().batch(query.bytes.data(), digests.front().bytes.data(), digests.size(), out.data());
}

}  // namespace devgeo
