#include "devgeo/cluemine.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "devgeo/text.hpp"

namespace devgeo {

namespace {

bool is_word_byte(unsigned char c) {
  // underscore counts as in regex \w; bytes of multi-byte UTF-8 sequences are letters
  return std::isalnum(c) || c == '_' || c >= 0x80;
}

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool matches_at(std::string_view text, std::size_t pos, std::string_view pattern) {
  if (pos + pattern.size() > text.size()) return false;
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (lower(text[pos + i]) != pattern[i]) return false;
  }
  return true;
}

void find_whole_words(std::string_view text, std::string_view pattern, std::vector<std::size_t>& offsets) {
  if (pattern.empty()) return;
  for (std::size_t pos = 0; pos + pattern.size() <= text.size(); ++pos) {
    if (!matches_at(text, pos, pattern)) continue;
    const bool left_ok = pos == 0 || !is_word_byte(static_cast<unsigned char>(text[pos - 1]));
    const std::size_t end = pos + pattern.size();
    const bool right_ok = end == text.size() || !is_word_byte(static_cast<unsigned char>(text[end]));
    if (left_ok && right_ok) offsets.push_back(pos);
  }
}

}  // namespace

std::size_t KeywordSet::size() const {
  std::size_t n = 0;
  for (const auto& c : categories) n += c.keywords.size();
  return n;
}

KeywordSet KeywordSet::defaults() {
  KeywordSet set;
  set.categories = {
      {"Common Road Types",
       {"street", "avenue", "road", "boulevard", "highway", "lane", "way", "drive", "path", "expressway", "parkway",
        "alley"}},
      {"Venue and Business Types",
       {"market", "shop", "store", "boutique", "supermarket", "pharmacy", "bank", "library", "museum", "restaurant",
        "hotel", "inn", "resort", "mall", "plaza", "center", "square", "park", "garden", "stadium", "theater",
        "cinema", "arena", "club"}},
      {"Administrative and Community Places",
       {"city_hall", "courthouse", "police_station", "fire_station", "community_center"}},
      {"Transportation Venues", {"airport", "station", "terminal", "bus_stop", "subway", "metro"}},
      {"Special Types", {"bridge", "castle", "monument", "landmark", "district", "neighborhood"}},
      {"Administrative Divisions",
       {"city", "town", "village", "county", "state", "province", "region", "municipality"}},
      {"Country and Continental Levels", {"country", "nation", "continent", "territory"}},
  };
  return set;
}

KeywordSet KeywordSet::parse(std::string_view content) {
  KeywordSet set;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = collapse_whitespace(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      set.categories.push_back({collapse_whitespace(trimmed.substr(1)), {}});
      continue;
    }
    if (set.categories.empty()) {
      throw std::runtime_error("keyword file line " + std::to_string(lineno) + ": keyword before any category header");
    }
    set.categories.back().keywords.push_back(to_lower_ascii(trimmed));
  }
  return set;
}

KeywordSet KeywordSet::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read keyword file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::vector<KeywordHit> match_keywords(std::string_view text, const KeywordSet& keywords) {
  struct Ranked {
    KeywordHit hit;
    std::size_t order;
  };
  std::vector<Ranked> found;
  std::size_t order = 0;
  std::vector<std::size_t> offsets;
  for (const auto& category : keywords.categories) {
    for (const auto& kw : category.keywords) {
      offsets.clear();
      find_whole_words(text, kw, offsets);
      if (kw.find('_') != std::string::npos) {
        std::string spaced = kw;
        std::replace(spaced.begin(), spaced.end(), '_', ' ');
        find_whole_words(text, spaced, offsets);
      }
      for (auto off : offsets) found.push_back({{kw, category.name, off}, order});
      ++order;
    }
  }
  std::sort(found.begin(), found.end(), [](const Ranked& a, const Ranked& b) {
    return a.hit.offset != b.hit.offset ? a.hit.offset < b.hit.offset : a.order < b.order;
  });
  std::vector<KeywordHit> hits;
  hits.reserve(found.size());
  for (auto& r : found) hits.push_back(std::move(r.hit));
  return hits;
}

std::string_view to_string(ClueRoute r) {
  return r == ClueRoute::kDeterministic ? "deterministic" : "needs_augmentation";
}

ClueRecord route_clue(const DiffEntry& entry, int cluster_id, const KeywordSet& keywords) {
  ClueRecord clue;
  clue.page_id = entry.page_id;
  clue.cluster_id = cluster_id;
  clue.path = entry.path.to_string();
  clue.text = entry.mining_text();
  clue.empty_text = clue.text.empty();
  clue.hits = match_keywords(clue.text, keywords);
  clue.route = clue.hits.empty() ? ClueRoute::kNeedsAugmentation : ClueRoute::kDeterministic;
  return clue;
}

}  // namespace devgeo
