#pragma once

#include <string>
#include <string_view>

namespace oracle {

// Straightforward Nilsimsa written from the original C sources: explicit
// last-four-character history, counted trigram total, table as a literal.
// Returns 64 hex characters, most significant byte first.
std::string nilsimsa_hex(std::string_view data);

}  // namespace oracle
