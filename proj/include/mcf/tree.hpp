#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace mcf {

/// Axis-aligned node. Rows with x[feature] <= threshold go left.
/// Children always carry larger ids than their parent.
struct TreeNode {
  static constexpr std::uint32_t kLeaf = UINT32_MAX;

  std::uint32_t feature = kLeaf;
  double threshold = 0.0;
  std::uint32_t left = 0;
  std::uint32_t right = 0;
  std::uint32_t parent = kLeaf;

  bool is_leaf() const { return feature == kLeaf; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat tree with one payload per node (internal nodes included).
template <class Payload>
struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<Payload> payload;

  std::size_t leaf_for(std::span<const double> x) const {
    std::size_t id = 0;
    while (!nodes[id].is_leaf()) {
      const TreeNode& node = nodes[id];
      id = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return id;
  }

  std::size_t num_leaves() const {
    std::size_t count = 0;
    for (const auto& node : nodes) count += node.is_leaf();
    return count;
  }

  std::size_t depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      d[i] = d[nodes[i].parent] + 1;
      deepest = std::max(deepest, d[i]);
    }
    return deepest;
  }

  bool same_structure(const Tree& other) const { return nodes == other.nodes; }
};

/// Debug dump: one line per node, "id kind feature threshold payload".
/// The format is for inspection only and carries no stability guarantee.
template <class Payload>
void dump_tree(std::ostream& out, const Tree<Payload>& tree,
               const std::function<void(std::ostream&, const Payload&)>& print_payload) {
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& node = tree.nodes[i];
    out << i << (node.is_leaf() ? " leaf - - " : " split ");
    if (!node.is_leaf()) out << node.feature << ' ' << node.threshold << ' ';
    print_payload(out, tree.payload[i]);
    out << '\n';
  }
}

}  // namespace mcf
