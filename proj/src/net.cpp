#include "devgeo/net.hpp"

#include <arpa/inet.h>

#include <httplib.h>

#include <charconv>
#include <stdexcept>

namespace devgeo::net {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::runtime_error("url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

httplib::Headers to_httplib(const Headers& headers) {
  httplib::Headers out;
  for (const auto& [k, v] : headers) out.emplace(k, v);
  return out;
}

void configure(httplib::Client& client, std::chrono::milliseconds timeout) {
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_follow_location(true);
}

}  // namespace

HttpResponse http_get(const std::string& url, const std::map<std::string, std::string>& params,
                      const Headers& headers, std::chrono::milliseconds timeout) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  configure(client, timeout);
  httplib::Params p(params.begin(), params.end());
  auto res = client.Get(parts.path, p, to_httplib(headers));
  if (!res) throw std::runtime_error("GET " + url + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

HttpResponse http_post_json(const std::string& url, const std::string& json_body, const Headers& headers,
                            std::chrono::milliseconds timeout) {
  const auto parts = split_url(url);
  httplib::Client client(parts.origin);
  configure(client, timeout);
  auto res = client.Post(parts.path, to_httplib(headers), json_body, "application/json");
  if (!res) throw std::runtime_error("POST " + url + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

std::optional<IpAddress> parse_ip(std::string_view text) {
  const std::string s(text);
  IpAddress ip;
  if (inet_pton(AF_INET, s.c_str(), ip.bytes.data()) == 1) return ip;
  ip.v6 = true;
  if (inet_pton(AF_INET6, s.c_str(), ip.bytes.data()) == 1) return ip;
  return std::nullopt;
}

IpAddress mask_address(const IpAddress& ip, int prefix) {
  IpAddress out = ip;
  for (int byte = 0; byte < 16; ++byte) {
    const int keep = std::clamp(prefix - byte * 8, 0, 8);
    const auto mask = static_cast<std::uint8_t>(keep == 0 ? 0 : (0xFF << (8 - keep)) & 0xFF);
    out.bytes[byte] &= mask;
  }
  return out;
}

std::optional<Cidr> parse_cidr(std::string_view text) {
  const auto slash = text.find('/');
  auto ip = parse_ip(text.substr(0, slash));
  if (!ip) return std::nullopt;
  int prefix = ip->bit_width();
  if (slash != std::string_view::npos) {
    const auto digits = text.substr(slash + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), prefix);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) return std::nullopt;
    if (prefix < 0 || prefix > ip->bit_width()) return std::nullopt;
  }
  return Cidr{mask_address(*ip, prefix), prefix};
}

}  // namespace devgeo::net
