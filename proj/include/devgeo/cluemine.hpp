#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "devgeo/diffext.hpp"

namespace devgeo {

struct KeywordCategory {
  std::string name;
  std::vector<std::string> keywords;  // lowercase
};

struct KeywordSet {
  std::vector<KeywordCategory> categories;

  std::size_t size() const;

  /// The 65 geographic keywords in seven categories.
  static KeywordSet defaults();
  /// "# Category Name" headers followed by one keyword per line. Blank lines
  /// are ignored. Throws std::runtime_error on unreadable files or keywords
  /// before the first header.
  static KeywordSet load(const std::filesystem::path& path);
  static KeywordSet parse(std::string_view content);
};

struct KeywordHit {
  std::string keyword;
  std::string category;
  std::size_t offset = 0;  // byte offset into the matched text

  friend bool operator==(const KeywordHit&, const KeywordHit&) = default;
};

/// Whole-word, ASCII case-insensitive matches, ordered by offset then by
/// keyword table order. Underscore keywords also match with a space.
std::vector<KeywordHit> match_keywords(std::string_view text, const KeywordSet& keywords);

enum class ClueRoute { kDeterministic, kNeedsAugmentation };

std::string_view to_string(ClueRoute r);

struct ClueRecord {
  std::string page_id;
  int cluster_id = 0;
  std::string path;
  std::string text;
  ClueRoute route = ClueRoute::kNeedsAugmentation;
  std::vector<KeywordHit> hits;
  bool empty_text = false;
};

ClueRecord route_clue(const DiffEntry& entry, int cluster_id, const KeywordSet& keywords);

}  // namespace devgeo
