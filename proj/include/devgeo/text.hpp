#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace devgeo {

/// Replaces invalid UTF-8 sequences with U+FFFD. Sets `had_invalid` when any
/// replacement happened.
std::string sanitize_utf8(std::string_view bytes, bool* had_invalid = nullptr);

/// Collapses runs of ASCII whitespace to one space and trims both ends.
std::string collapse_whitespace(std::string_view s);

/// NFC, full case folding, Unicode whitespace collapsed to single spaces,
/// trimmed. Idempotent.
std::string normalize_text(std::string_view raw);

/// normalize_text plus trailing punctuation stripped; used for geographic
/// entity names.
std::string canonicalize_entity(std::string_view raw);

/// Number of Unicode code points in valid UTF-8.
std::size_t utf8_length(std::string_view s);

/// First `max_chars` code points of `s`.
std::string utf8_prefix(std::string_view s, std::size_t max_chars);

/// Lowercase hex of the SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

std::string to_lower_ascii(std::string_view s);

}  // namespace devgeo
