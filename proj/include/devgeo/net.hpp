#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace devgeo::net {

struct HttpResponse {
  int status = 0;
  std::string body;
};

using Headers = std::multimap<std::string, std::string>;

/// GET `url` (http or https) with query parameters appended. Throws
/// std::runtime_error on transport failure; non-2xx statuses are returned.
HttpResponse http_get(const std::string& url, const std::map<std::string, std::string>& params,
                      const Headers& headers, std::chrono::milliseconds timeout);

HttpResponse http_post_json(const std::string& url, const std::string& json_body, const Headers& headers,
                            std::chrono::milliseconds timeout);

/// An IPv4 or IPv6 address in 16 bytes; IPv4 occupies the first 4.
struct IpAddress {
  bool v6 = false;
  std::array<std::uint8_t, 16> bytes{};

  int bit_width() const { return v6 ? 128 : 32; }
  friend bool operator==(const IpAddress&, const IpAddress&) = default;
  friend auto operator<=>(const IpAddress&, const IpAddress&) = default;
};

std::optional<IpAddress> parse_ip(std::string_view text);

struct Cidr {
  IpAddress network;  // host bits cleared
  int prefix = 0;
};

/// "10.0.0.0/8", "2001:db8::/32"; a bare address is a host route.
std::optional<Cidr> parse_cidr(std::string_view text);

IpAddress mask_address(const IpAddress& ip, int prefix);

}  // namespace devgeo::net

namespace devgeo::net {

/// Longest-prefix-match map from CIDR blocks to values, per address family.
template <typename T>
class PrefixMap {
 public:
  /// Returns false if the exact block was already present (first one wins).
  bool insert(const Cidr& cidr, T value) {
    auto& family = cidr.network.v6 ? v6_ : v4_;
    const bool inserted = family[cidr.prefix].emplace(cidr.network.bytes, std::move(value)).second;
    if (inserted) ++size_;
    return inserted;
  }

  const T* lookup(const IpAddress& addr) const {
    const auto& family = addr.v6 ? v6_ : v4_;
    for (const auto& [prefix, bucket] : family) {
      const auto masked = mask_address(addr, prefix);
      auto it = bucket.find(masked.bytes);
      if (it != bucket.end()) return &it->second;
    }
    return nullptr;
  }

  std::size_t size() const { return size_; }

 private:
  using Bucket = std::map<std::array<std::uint8_t, 16>, T>;
  std::map<int, Bucket, std::greater<>> v4_, v6_;  // longest prefix first
  std::size_t size_ = 0;
};

}  // namespace devgeo::net
