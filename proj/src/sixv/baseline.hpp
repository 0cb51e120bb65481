#pragma once

#include <array>
#include <map>
#include <memory>
#include <vector>

#include "sixv/addr.hpp"
#include "sixv/pixelgen.hpp"

namespace sixv::baseline {

// One node of the entropy space tree. `fixed` holds the nybble assignment the
// node's seeds all share (-1 = varies); children partition the seeds by the
// value of `split_pos`.
struct SpaceTreeNode {
  std::array<int8_t, 32> fixed;
  std::vector<addr::Address> seeds;
  int split_pos = -1;
  std::map<int, std::unique_ptr<SpaceTreeNode>> children;

  SpaceTreeNode() { fixed.fill(-1); }
  bool is_leaf() const { return children.empty(); }
  size_t seed_count() const { return seeds.size(); }
  std::vector<int> free_positions() const;
};

// Top-down partition: constant nybbles are pinned, then the node splits on the
// varying position with minimal entropy until single-seed nodes remain.
std::unique_ptr<SpaceTreeNode> build_tree(const std::vector<addr::Address>& seeds);
std::unique_ptr<SpaceTreeNode> build_tree(const addr::SeedSet& seeds);

// Budget allocation proportional to seed density over each region's free
// space. Leaves with free nybbles enumerate them in order; fully-split
// subtrees expand by substituting every value of each internal split
// position into the node's seeds (densest, most-pinned regions first).
pixelgen::CandidateBatch generate(const SpaceTreeNode& tree, uint64_t budget);

// Entropy of one nybble position over an address list (16-symbol alphabet).
double nybble_entropy(const std::vector<addr::Address>& seeds, int pos);

}  // namespace sixv::baseline
