#include <doctest.h>

#include <random>

#include "../support/nilsimsa_oracle.hpp"
#include "devgeo/digest.hpp"
#include "devgeo/simd/hamming.hpp"

using namespace devgeo;

namespace {

std::string random_bytes(std::mt19937& rng, std::size_t n) {
  std::uniform_int_distribution<int> byte(0, 255);
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(byte(rng));
  return s;
}

StructuralDigest random_digest(std::mt19937& rng) {
  StructuralDigest d;
  std::uniform_int_distribution<int> byte(0, 255);
  for (auto& b : d.bytes) b = static_cast<std::uint8_t>(byte(rng));
  return d;
}

std::string unhex(std::string_view hex) {
  std::string out;
  for (std::size_t i = 0; i + 1 < hex.size(); i += 2) out.push_back(static_cast<char>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
  return out;
}

}  // namespace

TEST_CASE("nilsimsa frozen vectors") {
  // Produced by a separate Python implementation.
  CHECK(nilsimsa_digest("").to_hex() == std::string(64, '0'));
  CHECK(nilsimsa_digest("abc").to_hex() == "0040" + std::string(60, '0'));
  CHECK(nilsimsa_digest("abcd").to_hex() == "0440000000000000000000000000000000100000000000000008000000000000");
  CHECK(nilsimsa_digest("abcdefgh").to_hex() == "14c8118000000000030800000004042004189020001308014088003280000078");
  CHECK(nilsimsa_digest("The quick brown fox jumps over the lazy dog").to_hex() ==
        "02b0b4ae03001086d100c660ab88503545c14ae760282108390a2928020120db");
  CHECK(nilsimsa_digest("html(0)body(1)\x1fhi").to_hex() ==
        "c130a83e06508110002c09a111b0c287062c902848443e488280595cc05a91bb");
  CHECK(nilsimsa_digest(unhex("4dca182530bb1d6d132cded6237b2ed91e3f721fcb19711744")).to_hex() ==
        "730950b8e23633e81c8aeb79b7de93c0749a818dd42fcc2facbf3e914899affe");
  CHECK(nilsimsa_digest(unhex("d6493c9d5c3460be31201e69fedaa0eee8b9997f5c7c29")).to_hex() ==
        "d284070244868c49114f3746a4c74cf88fdbc4348006aadc4ad0b82a45e12fe5");
}

TEST_CASE("nilsimsa agrees with the oracle on random inputs") {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<std::size_t> len(0, 2000);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_bytes(rng, i < 10 ? static_cast<std::size_t>(i) : len(rng));
    CHECK(nilsimsa_digest(s).to_hex() == oracle::nilsimsa_hex(s));
  }
}

TEST_CASE("digest hex round trip") {
  std::mt19937 rng(5);
  const auto d = random_digest(rng);
  const auto back = StructuralDigest::from_hex(d.to_hex());
  REQUIRE(back);
  CHECK(*back == d);
  CHECK_FALSE(StructuralDigest::from_hex("abc"));
  CHECK_FALSE(StructuralDigest::from_hex(std::string(63, '0') + "g"));
  CHECK(StructuralDigest::from_hex(std::string(64, 'F')));
}

TEST_CASE("hamming distance bounds and similarity") {
  StructuralDigest zero, ones;
  ones.bytes.fill(0xFF);
  CHECK(hamming_distance(zero, zero) == 0);
  CHECK(hamming_distance(zero, ones) == 256);
  CHECK(similarity(zero, zero) == 1.0);
  CHECK(similarity(zero, ones) == 0.0);
  StructuralDigest one_bit;
  one_bit.bytes[31] = 1;
  CHECK(one_bit.bucket_bit(0));
  CHECK(hamming_distance(zero, one_bit) == 1);
}

TEST_CASE("hamming kernels agree across ISAs") {
  using namespace devgeo::simd;
  const HammingKernels* scalar = kernels_for(Isa::kScalar);
  REQUIRE(scalar != nullptr);
  const HammingKernels* avx2 = kernels_for(Isa::kAvx2);
  if (avx2 == nullptr) {
    MESSAGE("AVX2 kernels unavailable on this machine; scalar only");
    return;
  }
  std::mt19937 rng(99);
  std::vector<StructuralDigest> digests;
  for (int i = 0; i < 1037; ++i) digests.push_back(random_digest(rng));
  StructuralDigest all;
  all.bytes.fill(0xFF);
  digests.push_back(all);
  digests.push_back(StructuralDigest{});
  const auto* raw = digests.front().bytes.data();
  for (std::size_t i = 0; i < digests.size(); ++i) {
    const auto* a = digests[i].bytes.data();
    const auto* b = digests[(i * 7 + 3) % digests.size()].bytes.data();
    CHECK(scalar->one(a, b) == avx2->one(a, b));
  }
  for (std::size_t count : {std::size_t{0}, std::size_t{1}, std::size_t{3}, std::size_t{4}, std::size_t{5},
                            digests.size()}) {
    std::vector<std::uint16_t> s(count + 1, 7), v(count + 1, 7);
    scalar->batch(digests[17].bytes.data(), raw, count, s.data());
    avx2->batch(digests[17].bytes.data(), raw, count, v.data());
    CHECK(s == v);
    CHECK(v[count] == 7);  // no write past the end
  }
}

TEST_CASE("batch distances match pairwise distances") {
  std::mt19937 rng(3);
  std::vector<StructuralDigest> digests;
  for (int i = 0; i < 50; ++i) digests.push_back(random_digest(rng));
  std::vector<std::uint16_t> out(digests.size());
  hamming_distances(digests[0], digests, out);
  for (std::size_t i = 0; i < digests.size(); ++i) CHECK(out[i] == hamming_distance(digests[0], digests[i]));
}
