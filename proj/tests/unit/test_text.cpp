#include <doctest.h>

#include "devgeo/text.hpp"

using namespace devgeo;

TEST_CASE("normalize_text collapses, folds and trims") {
  CHECK(normalize_text("  Main   STREET ") == "main street");
  CHECK(normalize_text("") == "");
  CHECK(normalize_text("Boston\tOffice\n") == "boston office");
  // no-break space and ideographic space count as whitespace
  CHECK(normalize_text("a\xC2\xA0\xE3\x80\x80" "b") == "a b");
  // decomposed e + combining acute composes to U+00E9
  CHECK(normalize_text("Cafe\xCC\x81") == "caf\xC3\xA9");
  CHECK(normalize_text("STRASSE") == "strasse");
  CHECK(normalize_text("Stra\xC3\x9F" "e") == "strasse");
}

TEST_CASE("normalize_text is idempotent") {
  for (const char* s : {"  Main   STREET ", "Cafe\xCC\x81 DE PARIS", "\xC3\x9F\xE1\xBA\x9E", "x"}) {
    const auto once = normalize_text(s);
    CHECK(normalize_text(once) == once);
  }
}

TEST_CASE("canonicalize_entity strips trailing punctuation") {
  CHECK(canonicalize_entity("Paris.") == "paris");
  CHECK(canonicalize_entity("  State Street, ") == "state street");
  CHECK(canonicalize_entity("\"Berlin\"") == "\"berlin");
  CHECK(canonicalize_entity("...") == "");
}

TEST_CASE("sanitize_utf8 replaces bad sequences") {
  bool bad = false;
  CHECK(sanitize_utf8("ok", &bad) == "ok");
  CHECK_FALSE(bad);
  CHECK(sanitize_utf8("a\xFF" "b", &bad) == "a\xEF\xBF\xBD" "b");
  CHECK(bad);
}

TEST_CASE("utf8 length and prefix count code points") {
  const std::string s = "h\xC3\xA9llo";
  CHECK(utf8_length(s) == 5);
  CHECK(utf8_prefix(s, 2) == "h\xC3\xA9");
  CHECK(utf8_prefix(s, 10) == s);
}

TEST_CASE("sha256_hex known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
