#include <doctest.h>

#include "devgeo/net.hpp"

using namespace devgeo::net;

TEST_CASE("parse_ip handles both families") {
  const auto v4 = parse_ip("192.0.2.1");
  REQUIRE(v4);
  CHECK_FALSE(v4->v6);
  CHECK(v4->bytes[3] == 1);
  const auto v6 = parse_ip("2001:db8::1");
  REQUIRE(v6);
  CHECK(v6->v6);
  CHECK(v6->bytes[15] == 1);
  CHECK_FALSE(parse_ip("1.2.3"));
  CHECK_FALSE(parse_ip(""));
}

TEST_CASE("parse_cidr clears host bits") {
  const auto c = parse_cidr("10.1.2.3/8");
  REQUIRE(c);
  CHECK(c->prefix == 8);
  CHECK(c->network == *parse_ip("10.0.0.0"));
  CHECK(parse_cidr("10.0.0.1")->prefix == 32);
  CHECK_FALSE(parse_cidr("10.0.0.0/33"));
  CHECK_FALSE(parse_cidr("2001:db8::/129"));
  CHECK_FALSE(parse_cidr("10.0.0.0/x"));
}

TEST_CASE("mask_address on odd prefixes") {
  CHECK(mask_address(*parse_ip("192.0.2.255"), 25) == *parse_ip("192.0.2.128"));
  CHECK(mask_address(*parse_ip("192.0.2.255"), 0) == *parse_ip("0.0.0.0"));
}

TEST_CASE("prefix map prefers longer prefixes and keeps families apart") {
  PrefixMap<int> m;
  CHECK(m.insert(*parse_cidr("0.0.0.0/0"), 0));
  CHECK(m.insert(*parse_cidr("10.0.0.0/8"), 8));
  CHECK(m.insert(*parse_cidr("10.1.0.0/16"), 16));
  CHECK_FALSE(m.insert(*parse_cidr("10.1.0.0/16"), 99));
  CHECK(m.size() == 3);
  CHECK(*m.lookup(*parse_ip("10.1.9.9")) == 16);
  CHECK(*m.lookup(*parse_ip("10.2.0.1")) == 8);
  CHECK(*m.lookup(*parse_ip("11.0.0.1")) == 0);
  CHECK(m.lookup(*parse_ip("::1")) == nullptr);
}
