#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "lvcd/latent_dag.hpp"

namespace lvcd {

// Pure children of a latent cover: measured-or-latent nodes outside the cover
// whose parents all lie inside the cover and that have no descendant inside
// it.  Returns the maximal such set when its parent union equals the whole
// cover, otherwise an empty list.
std::vector<std::set<NodeId>> pure_children(const LatentDag& g, const std::set<NodeId>& cover);

bool is_atomic_cover(const LatentDag& g, const std::set<NodeId>& cover);

// All atomic covers of g, as latent bitmasks in ascending numeric order.
std::vector<uint64_t> atomic_covers(const LatentDag& g);

bool satisfies_one_factor(const LatentDag& g);
bool satisfies_hierarchical(const LatentDag& g);

// Memoizing helper used by the free functions above and by enumeration /
// operator code that asks many cover queries against one graph.
class CoverAnalysis {
  public:
    explicit CoverAnalysis(const LatentDag& g) : graph(g) {}

    const NodeGraph graph;

    // Nodes eligible as pure children of the cover (flat-id mask).
    uint64_t eligible_pure_children(uint64_t cover_mask) const;
    // True iff the eligible set is non-empty and its parent union is exactly
    // the cover; writes the eligible mask through out_mask when non-null.
    bool maximal_pure_child_set(uint64_t cover_mask, uint64_t* out_mask) const;

    bool is_atomic(uint64_t cover_mask);
    std::vector<uint64_t> all_atomic_covers();

  private:
    bool atomic_uncached(uint64_t cover_mask);
    // True iff the cover splits into >= 2 disjoint atomic covers.
    bool proper_partition_into_atomic(uint64_t cover_mask);
    // True iff the mask splits into >= 1 disjoint atomic covers (empty: true).
    bool partitionable_into_atomic(uint64_t mask);

    std::map<uint64_t, bool> atomic_memo_;
    std::map<uint64_t, bool> partition_memo_;
};

}  // namespace lvcd
