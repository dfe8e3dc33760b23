#pragma once

#include <compare>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace lvcd {

enum class NodeKind { Latent, Measured };

// Identifies one variable of a latent-variable DAG.
struct NodeId {
    NodeKind kind = NodeKind::Latent;
    int index = 0;

    auto operator<=>(const NodeId&) const = default;
};

inline NodeId latent_node(int j) { return NodeId{NodeKind::Latent, j}; }
inline NodeId measured_node(int i) { return NodeId{NodeKind::Measured, i}; }

std::string to_string(const NodeId& v);

// Directed acyclic graph over n latent variables L_0..L_{n-1} and m measured
// variables X_0..X_{m-1}.  Measured variables never have outgoing edges.
// Latent-latent edges always point from a higher index to a lower index
// (L_parent -> L_child requires parent > child), which makes the latent
// adjacency strictly upper triangular under the fixed ordering and rules out
// cycles by construction.
//
// Flat node ids used by the graph algorithms: latent j -> j, measured i -> n+i.
class LatentDag {
  public:
    LatentDag() = default;
    LatentDag(int m, int n);

    int m() const { return m_; }
    int n() const { return n_; }
    int num_nodes() const { return m_ + n_; }
    int edge_count() const;

    bool measurement_edge(int latent, int measured) const;
    void set_measurement_edge(int latent, int measured, bool present = true);

    // parent > child is enforced.
    bool latent_edge(int parent, int child) const;
    void set_latent_edge(int parent, int child, bool present = true);

    // (parent, child) pairs, deterministic order.
    std::vector<std::pair<int, int>> latent_edges() const;
    // (latent, measured) pairs, deterministic order.
    std::vector<std::pair<int, int>> measurement_edges() const;

    int flat(const NodeId& v) const;
    NodeId unflat(int flat_id) const;

    // Bit masks over flat node ids.
    uint64_t parent_mask(int flat_id) const;
    uint64_t child_mask(int flat_id) const;
    uint64_t adjacent_mask(int flat_id) const;

    int measured_child_count(int latent) const;
    int latent_parent_count_of_measured(int measured) const;

    bool operator==(const LatentDag&) const = default;

  private:
    int m_ = 0;
    int n_ = 0;
    std::vector<uint64_t> meas_parents_;  // size m, bits = latent ids
    std::vector<uint64_t> lat_parents_;   // size n, bits = latent ids (all > own index)
};

// Precomputed adjacency masks for the graph algorithms.
struct NodeGraph {
    int m = 0;
    int n = 0;
    int num = 0;
    std::vector<uint64_t> parents;
    std::vector<uint64_t> children;
    std::vector<uint64_t> adjacent;

    explicit NodeGraph(const LatentDag& g);

    uint64_t ancestors(uint64_t seed) const;    // closure under parents, excludes seed unless reached
    uint64_t descendants(uint64_t seed) const;  // proper descendants of the seed set
};

// ---- structural queries -----------------------------------------------------

// Unordered skeleton edges as flat id pairs (a < b).
std::set<std::pair<int, int>> skeleton(const LatentDag& g);

// V-structures a -> c <- b with a, b non-adjacent; encoded (min(a,b), c, max(a,b)).
std::set<std::tuple<int, int, int>> v_structures(const LatentDag& g);

// d-separation of a and b given z (moralized-ancestral-graph reachability).
// Sets must be pairwise disjoint and non-empty for a and b.
bool d_separated(const LatentDag& g, const std::set<NodeId>& a, const std::set<NodeId>& b,
                 const std::set<NodeId>& z);

// Mask-based core used by the hot paths; a_mask/b_mask non-empty and disjoint from z_mask.
bool d_separated_masks(const NodeGraph& g, uint64_t a_mask, uint64_t b_mask, uint64_t z_mask);

// True iff some permutation of g2's latent labels gives g1's skeleton and
// v-structures.  Measured labels stay fixed.  m must agree (throws otherwise);
// differing n returns false.
bool markov_equivalent(const LatentDag& g1, const LatentDag& g2);

// Canonical encoding of (skeleton, v-structures) minimized over latent
// relabelings; equal signatures <=> markov_equivalent.
std::vector<uint64_t> mec_signature(const LatentDag& g);

// Completed partially directed acyclic graph over the full node set.
struct Cpdag {
    int m = 0;
    int n = 0;
    std::set<std::pair<int, int>> directed;    // flat (from, to)
    std::set<std::pair<int, int>> undirected;  // flat (a, b), a < b

    bool operator==(const Cpdag&) const = default;
};

// Compelled edges via v-structures plus Meek rules R1-R3.
Cpdag cpdag(const LatentDag& g);

// ---- construction from edge lists / JSON --------------------------------------

// Builds a graph from (parent, child) latent edges and (latent, measured)
// measurement edges.  Accepts any acyclic latent edge set; relabels latents
// topologically when the input does not already satisfy the parent-index >
// child-index convention.  Throws std::invalid_argument on cycles or bad
// indices.
LatentDag build_latent_dag(int m, int n, const std::vector<std::pair<int, int>>& latent_edges,
                           const std::vector<std::pair<int, int>>& measurement_edges);

std::string latent_dag_to_json(const LatentDag& g);

// Accepts any acyclic latent edge set; relabels latents topologically when the
// input does not already satisfy the parent-index > child-index convention.
// Throws std::invalid_argument on cycles, bad indices, or malformed JSON.
LatentDag latent_dag_from_json(const std::string& text);

// ---- small helpers ----------------------------------------------------------

inline int popcount64(uint64_t x) { return __builtin_popcountll(x); }

// Iterate set bits low to high.
template <typename Fn>
void for_each_bit(uint64_t mask, Fn&& fn) {
    while (mask) {
        int b = __builtin_ctzll(mask);
        fn(b);
        mask &= mask - 1;
    }
}

}  // namespace lvcd
