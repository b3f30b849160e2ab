#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "devgeo/cluster.hpp"
#include "devgeo/corpus.hpp"

namespace devgeo {

struct PathStep {
  std::string tag;
  int index = 0;  // position among same-tag siblings

  friend bool operator==(const PathStep&, const PathStep&) = default;
  friend auto operator<=>(const PathStep&, const PathStep&) = default;
};

struct NodePath {
  std::vector<PathStep> steps;

  /// "html[0]/body[0]/td[1]"
  std::string to_string() const;

  friend bool operator==(const NodePath&, const NodePath&) = default;
  friend auto operator<=>(const NodePath&, const NodePath&) = default;
};

/// Follows `path` from the root; nullptr when any step is missing.
const DomNode* resolve_path(const DomTree& tree, const NodePath& path);

/// Paths of all nodes with non-empty text, in document order.
std::vector<NodePath> text_bearing_paths(const DomTree& tree);

struct AlignedNodeGroup {
  NodePath path;
  std::map<std::string, std::string> texts;  // page_id -> raw text
};

using TreeMap = std::map<std::string, DomTree, std::less<>>;

/// Groups each text-bearing node of the reference with the nodes at the same
/// path in the other trees. Only groups spanning two or more pages are kept.
std::vector<AlignedNodeGroup> align_node_groups(const TreeMap& trees, std::string_view reference);

inline constexpr std::size_t kMiningTextLimit = 512;

struct DiffEntry {
  std::string page_id;
  NodePath path;
  std::string text;  // normalized, full length

  bool truncated() const;
  /// Text handed to the mining stages: at most 512 code points, with an
  /// ellipsis marker when cut.
  std::string mining_text() const;
};

struct DifferentialTextSet {
  int cluster_id = 0;
  std::vector<DiffEntry> entries;
  bool skipped_singleton = false;
  // text-bearing nodes in peers whose path is absent from the reference
  std::size_t unaligned_peer_nodes = 0;
};

/// Differential texts for one cluster. The first member with a tree is the
/// reference; members missing from `trees` are ignored.
DifferentialTextSet extract_differential(const Cluster& cluster, const TreeMap& trees);

}  // namespace devgeo
