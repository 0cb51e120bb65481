#include "sixv/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sixv/error.hpp"

namespace sixv::baseline {

std::vector<int> SpaceTreeNode::free_positions() const {
  std::vector<int> out;
  for (int i = 0; i < 32; ++i)
    if (fixed[size_t(i)] < 0) out.push_back(i);
  return out;
}

double nybble_entropy(const std::vector<addr::Address>& seeds, int pos) {
  std::array<size_t, 16> counts{};
  for (const auto& a : seeds) counts[size_t(a.nybble(pos))]++;
  double h = 0.0;
  const double n = double(seeds.size());
  for (size_t c : counts) {
    if (c == 0) continue;
    const double p = double(c) / n;
    h -= p * std::log2(p);
  }
  return h;
}

namespace {

void build_node(SpaceTreeNode& node) {
  // Pin every constant position.
  for (int pos = 0; pos < 32; ++pos) {
    if (node.fixed[size_t(pos)] >= 0) continue;
    const int v0 = node.seeds[0].nybble(pos);
    bool constant = std::all_of(node.seeds.begin(), node.seeds.end(),
                                [&](const addr::Address& a) {
                                  return a.nybble(pos) == v0;
                                });
    if (constant) node.fixed[size_t(pos)] = int8_t(v0);
  }
  if (node.seeds.size() <= 1) return;

  int best_pos = -1;
  double best_h = 0.0;
  for (int pos = 0; pos < 32; ++pos) {
    if (node.fixed[size_t(pos)] >= 0) continue;
    const double h = nybble_entropy(node.seeds, pos);
    if (h > 0.0 && (best_pos < 0 || h < best_h)) {
      best_h = h;
      best_pos = pos;
    }
  }
  if (best_pos < 0) return;  // nothing varies

  node.split_pos = best_pos;
  std::map<int, std::vector<addr::Address>> groups;
  for (const auto& a : node.seeds) groups[a.nybble(best_pos)].push_back(a);
  for (auto& [value, group] : groups) {
    auto child = std::make_unique<SpaceTreeNode>();
    child->fixed = node.fixed;
    child->fixed[size_t(best_pos)] = int8_t(value);
    child->seeds = std::move(group);
    build_node(*child);
    node.children.emplace(value, std::move(child));
  }
}

struct Region {
  const SpaceTreeNode* node;
  double density;
  uint64_t capacity;  // how many distinct candidates the region can yield
};

addr::Address with_nybble(addr::Address a, int pos, int value) {
  a.set_nybble(pos, value);
  return a;
}

// Candidates of an internal node: every value of its split position
// substituted into each seed beneath it (the region's dimensional closure).
// Seen values matter too — a value observed under one seed is evidence for
// the siblings — so capacity grows, not shrinks, as the seed set densifies.
void region_candidates(const SpaceTreeNode& node, uint64_t limit,
                       std::vector<addr::Address>& out) {
  std::set<addr::Address> emitted;
  for (int v = 0; v < 16 && out.size() < limit; ++v) {
    for (const auto& s : node.seeds) {
      if (out.size() >= limit) break;
      if (s.nybble(node.split_pos) == v) continue;
      addr::Address a = with_nybble(s, node.split_pos, v);
      if (emitted.insert(a).second) out.push_back(a);
    }
  }
}

// Candidates of a leaf with free positions: enumerate free-nybble values in
// order, excluding the leaf's own seeds.
void leaf_candidates(const SpaceTreeNode& node, uint64_t limit,
                     std::vector<addr::Address>& out) {
  const auto frees = node.free_positions();
  if (frees.empty()) return;
  if (frees.size() > 15) return;  // unenumerable free space, density ~0 anyway
  const uint64_t space = 1ULL << (4 * frees.size());
  std::set<addr::Address> seeds(node.seeds.begin(), node.seeds.end());
  addr::Address base;
  for (int i = 0; i < 32; ++i)
    if (node.fixed[size_t(i)] >= 0) base.set_nybble(i, node.fixed[size_t(i)]);
  for (uint64_t idx = 0; idx < space && out.size() < limit; ++idx) {
    addr::Address a = base;
    uint64_t rem = idx;
    for (auto it = frees.rbegin(); it != frees.rend(); ++it) {
      a.set_nybble(*it, int(rem & 0xf));
      rem >>= 4;
    }
    if (!seeds.count(a)) out.push_back(a);
  }
}

void collect_regions(const SpaceTreeNode& node, std::vector<Region>& regions) {
  if (node.is_leaf()) {
    const auto frees = node.free_positions();
    if (!frees.empty() && frees.size() <= 15) {
      const double space = std::pow(16.0, double(frees.size()));
      const uint64_t cap = uint64_t(space) - node.seeds.size();
      if (cap > 0)
        regions.push_back(Region{&node, double(node.seeds.size()) / space, cap});
    }
    return;
  }
  // Internal-node substitutions are one-nybble mutations of the node's seeds;
  // their region is the node's whole varying subspace, so the density uses
  // 16^(varying positions), not a flat 16. Deep, mostly-pinned nodes rank
  // first; near-root nodes (which mutate prefix-distinguishing nybbles) become
  // a last resort instead of swallowing the budget as the seed set grows.
  int varying = 0;
  for (int i = 0; i < 32; ++i)
    if (node.fixed[size_t(i)] < 0) ++varying;
  regions.push_back(Region{&node,
                           double(node.seeds.size()) / std::pow(16.0, double(varying)),
                           15 * node.seeds.size()});
  for (const auto& [v, c] : node.children) collect_regions(*c, regions);
}

}  // namespace

std::unique_ptr<SpaceTreeNode> build_tree(const std::vector<addr::Address>& seeds) {
  if (seeds.empty())
    throw Error(ErrorCode::EmptySeedSet, "space tree needs at least one seed");
  auto root = std::make_unique<SpaceTreeNode>();
  std::set<addr::Address> uniq(seeds.begin(), seeds.end());
  root->seeds.assign(uniq.begin(), uniq.end());
  build_node(*root);
  return root;
}

std::unique_ptr<SpaceTreeNode> build_tree(const addr::SeedSet& seeds) {
  return build_tree(seeds.addresses());
}

pixelgen::CandidateBatch generate(const SpaceTreeNode& tree, uint64_t budget) {
  pixelgen::CandidateBatch batch;
  if (budget == 0) return batch;

  std::vector<Region> regions;
  collect_regions(tree, regions);
  std::stable_sort(regions.begin(), regions.end(),
                   [](const Region& a, const Region& b) { return a.density > b.density; });
  double total_w = 0.0;
  for (const auto& r : regions) total_w += r.density;
  if (regions.empty() || total_w <= 0.0) return batch;

  std::set<addr::Address> seeds(tree.seeds.begin(), tree.seeds.end());
  std::set<addr::Address> emitted;

  // Proportional quotas in density order, then fill remaining budget from the
  // densest regions still holding capacity.
  for (int pass = 0; pass < 2 && batch.addresses.size() < budget; ++pass) {
    for (auto& r : regions) {
      if (batch.addresses.size() >= budget) break;
      uint64_t quota = pass == 0
          ? uint64_t(std::ceil(double(budget) * r.density / total_w))
          : budget - batch.addresses.size();
      quota = std::min<uint64_t>(quota, budget - batch.addresses.size());
      std::vector<addr::Address> raw;
      // Request extra to survive seed/dup exclusion.
      const uint64_t want = std::min<uint64_t>(r.capacity, quota * 2 + 16);
      if (r.node->is_leaf()) leaf_candidates(*r.node, want, raw);
      else region_candidates(*r.node, want, raw);
      uint64_t taken = 0;
      for (const auto& a : raw) {
        if (taken >= quota) break;
        if (seeds.count(a) || !emitted.insert(a).second) continue;
        batch.addresses.push_back(a);
        ++taken;
      }
    }
  }
  return batch;
}

}  // namespace sixv::baseline
