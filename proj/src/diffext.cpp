#include "devgeo/diffext.hpp"

#include <set>
#include <stdexcept>

#include "devgeo/text.hpp"

namespace devgeo {

namespace {

void collect_paths(const DomNode& node, NodePath& current, std::vector<NodePath>& out) {
  if (!node.text.empty()) out.push_back(current);
  std::map<std::string_view, int> seen;
  for (const auto& child : node.children) {
    const int index = seen[child.tag]++;
    current.steps.push_back({child.tag, index});
    collect_paths(child, current, out);
    current.steps.pop_back();
  }
}

}  // namespace

std::string NodePath::to_string() const {
  std::string out;
  for (const auto& step : steps) {
    if (!out.empty()) out.push_back('/');
    out.append(step.tag);
    out.push_back('[');
    out.append(std::to_string(step.index));
    out.push_back(']');
  }
  return out;
}

const DomNode* resolve_path(const DomTree& tree, const NodePath& path) {
  if (path.steps.empty() || path.steps.front().tag != tree.root.tag || path.steps.front().index != 0) return nullptr;
  const DomNode* node = &tree.root;
  for (std::size_t s = 1; s < path.steps.size(); ++s) {
    const auto& step = path.steps[s];
    int seen = 0;
    const DomNode* next = nullptr;
    for (const auto& child : node->children) {
      if (child.tag != step.tag) continue;
      if (seen++ == step.index) {
        next = &child;
        break;
      }
    }
    if (next == nullptr) return nullptr;
    node = next;
  }
  return node;
}

std::vector<NodePath> text_bearing_paths(const DomTree& tree) {
  std::vector<NodePath> out;
  NodePath current;
  current.steps.push_back({tree.root.tag, 0});
  collect_paths(tree.root, current, out);
  return out;
}

std::vector<AlignedNodeGroup> align_node_groups(const TreeMap& trees, std::string_view reference) {
  auto ref_it = trees.find(reference);
  if (ref_it == trees.end()) throw std::invalid_argument("reference page has no tree");
  std::vector<AlignedNodeGroup> groups;
  for (auto& path : text_bearing_paths(ref_it->second)) {
    AlignedNodeGroup group;
    for (const auto& [page_id, tree] : trees) {
      if (const DomNode* node = resolve_path(tree, path)) group.texts.emplace(page_id, node->text);
    }
    if (group.texts.size() >= 2) {
      group.path = std::move(path);
      groups.push_back(std::move(group));
    }
  }
  return groups;
}

bool DiffEntry::truncated() const { return utf8_length(text) > kMiningTextLimit; }

std::string DiffEntry::mining_text() const {
  if (!truncated()) return text;
  return utf8_prefix(text, kMiningTextLimit - 1) + "\xE2\x80\xA6";
}

DifferentialTextSet extract_differential(const Cluster& cluster, const TreeMap& trees) {
  DifferentialTextSet out;
  out.cluster_id = cluster.cluster_id;

  TreeMap members;
  std::string reference;
  for (const auto& id : cluster.members) {
    auto it = trees.find(id);
    if (it == trees.end()) continue;
    if (reference.empty()) reference = id;
    members.emplace(id, it->second);
  }
  if (members.size() < 2) {
    out.skipped_singleton = true;
    return out;
  }

  const DomTree& ref_tree = members.at(reference);
  for (const auto& [page_id, tree] : members) {
    if (page_id == reference) continue;
    for (const auto& path : text_bearing_paths(tree)) {
      if (resolve_path(ref_tree, path) == nullptr) ++out.unaligned_peer_nodes;
    }
  }

  // emit in cluster member order within each group
  for (const auto& group : align_node_groups(members, reference)) {
    std::map<std::string, std::string> normalized;
    std::set<std::string> distinct;
    for (const auto& [page_id, raw] : group.texts) {
      auto norm = normalize_text(raw);
      distinct.insert(norm);
      normalized.emplace(page_id, std::move(norm));
    }
    if (distinct.size() < 2) continue;
    for (const auto& id : cluster.members) {
      auto it = normalized.find(id);
      if (it == normalized.end()) continue;
      out.entries.push_back({id, group.path, it->second});
    }
  }
  return out;
}

}  // namespace devgeo
