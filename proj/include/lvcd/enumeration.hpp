#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lvcd/latent_dag.hpp"

namespace lvcd {

enum class EnumerationMode { OneFactor, Hierarchical };

struct EnumerationConfig {
    int m = 0;      // number of measured variables
    int n_max = 0;  // 0 = mode default (one-factor: m/3); hierarchical mode requires a value
    EnumerationMode mode = EnumerationMode::OneFactor;
    bool dedupe = true;
    long candidate_cap = 1000000;  // guard on assembled hierarchical candidates
};

// Labeled DAG on n nodes: bit p of parents[c] set means p -> c.  Unlike
// LatentDag, edges may point from a lower to a higher index (an equivalence
// class can pin a collider at any node, so representatives cannot always
// follow the LatentDag index convention).
struct DagFragment {
    int n = 0;
    std::vector<uint64_t> parents;

    bool operator==(const DagFragment&) const = default;
};

// One representative per Markov equivalence class (same skeleton and
// v-structures, labels fixed) of labeled DAGs on n nodes.  The representative
// is the class member whose row-major adjacency bit string is
// lexicographically smallest, and the output is sorted by that encoding.
// Throws std::invalid_argument when n < 1 or n > 6 (combinatorial guard).
std::vector<DagFragment> enumerate_latent_mecs(int n);

// Visits every assignment of the items {0, ..., item_count-1} into k ordered
// blocks, each non-empty with at least min_size items, passing the blocks as
// bitmasks.  Every assignment appears exactly once; the order is
// deterministic.  Returns the number of partitions visited (zero when the
// constraints are infeasible).
long ordered_partitions(int item_count, int k, int min_size,
                        const std::function<void(const std::vector<uint64_t>&)>& visit);

// Visits every partition of {0, ..., n-1} into unordered non-empty blocks,
// passing the blocks as bitmasks ordered by smallest member.  Deterministic
// (restricted-growth-string) order.  Returns the number of partitions.
long for_each_cover_partition(int n,
                              const std::function<void(const std::vector<uint64_t>&)>& visit);

// Materialized version of for_each_cover_partition; n > 12 throws.
std::vector<std::vector<uint64_t>> enumerate_cover_partitions(int n);

// All structures with every measured variable attached to exactly one latent
// parent and every latent having at least three measured children, for latent
// counts 1..n_max, deduplicated up to Markov equivalence with relabeled
// latents.  Deterministic order.
std::vector<LatentDag> enumerate_one_factor(const EnumerationConfig& cfg);

// All hierarchical candidates in reduced canonical form, deduplicated up to
// Markov equivalence: for each latent count 1..n_max the latents are
// partitioned into covers, a DAG over the covers is expanded into complete
// bipartite blocks, and cover-to-measured edges are likewise all-or-nothing
// per cover.  Keeps a graph iff it satisfies the hierarchical assumption and
// equals op_min(op_skeleton(itself)).  Throws std::runtime_error when the
// number of assembled candidates exceeds cfg.candidate_cap.
std::vector<LatentDag> enumerate_hierarchical(const EnumerationConfig& cfg);

}  // namespace lvcd
