#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace devgeo {

struct Endpoint {
  std::string ip;
  std::uint16_t port = 0;
};

struct PageRecord {
  std::string page_id;
  Endpoint endpoint;
  std::string html;  // raw bytes as captured
  std::optional<std::string> captured_at;
  std::optional<std::string> source;
};

struct DomNode {
  std::string tag;
  std::vector<std::pair<std::string, std::string>> attrs;  // only id/class survive
  std::vector<DomNode> children;
  std::string text;  // immediate text children, whitespace-collapsed
};

struct DomTree {
  DomNode root;
  std::size_t node_count = 0;
};

struct SerializedPage {
  std::string page_id;
  std::string composite;
};

struct CorpusLoadResult {
  std::vector<PageRecord> pages;  // sorted by page_id
  std::size_t skipped = 0;
  std::vector<std::string> diagnostics;
};

/// Separates the structure section of a composite from its text section,
/// and text fragments from each other.
inline constexpr char kCompositeDelimiter = '\x1f';

bool is_valid_ip(std::string_view ip);

/// Reads a JSON-lines manifest, or `manifest.jsonl` inside a directory.
/// Throws CorpusError when the path does not exist.
CorpusLoadResult load_corpus(const std::filesystem::path& path);

/// Tolerant HTML parse into a normalized tree. Throws PageUnparseable for
/// empty input, or for undecodable input that yields no elements.
DomTree parse_dom(std::string_view html);
inline DomTree parse_dom(const PageRecord& page) { return parse_dom(page.html); }

SerializedPage serialize_page(const DomTree& tree, std::string page_id);

std::size_t count_nodes(const DomNode& node);

}  // namespace devgeo
