#include "lvcd/covers.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace lvcd {

namespace {

uint64_t latent_mask_of(const LatentDag& g, const std::set<NodeId>& cover) {
    uint64_t mask = 0;
    for (const NodeId& v : cover) {
        if (v.kind != NodeKind::Latent)
            throw std::invalid_argument("cover must contain latent variables only");
        if (v.index < 0 || v.index >= g.n()) throw std::out_of_range("cover index out of range");
        mask |= (uint64_t{1} << v.index);
    }
    return mask;
}

}  // namespace

uint64_t CoverAnalysis::eligible_pure_children(uint64_t cover_mask) const {
    const NodeGraph& g = graph;
    uint64_t children = 0;
    for_each_bit(cover_mask, [&](int l) { children |= g.children[l]; });
    children &= ~cover_mask;

    uint64_t eligible = 0;
    for_each_bit(children, [&](int v) {
        if ((g.parents[v] & ~cover_mask) != 0) return;                    // parents inside L only
        if ((g.descendants(uint64_t{1} << v) & cover_mask) != 0) return;  // no descendant in L
        eligible |= (uint64_t{1} << v);
    });
    return eligible;
}

bool CoverAnalysis::maximal_pure_child_set(uint64_t cover_mask, uint64_t* out_mask) const {
    uint64_t e = eligible_pure_children(cover_mask);
    uint64_t par_union = 0;
    for_each_bit(e, [&](int v) { par_union |= graph.parents[v]; });
    if (out_mask) *out_mask = e;
    return e != 0 && par_union == cover_mask;
}

bool CoverAnalysis::is_atomic(uint64_t cover_mask) {
    auto it = atomic_memo_.find(cover_mask);
    if (it != atomic_memo_.end()) return it->second;
    bool v = atomic_uncached(cover_mask);
    atomic_memo_[cover_mask] = v;
    return v;
}

bool CoverAnalysis::atomic_uncached(uint64_t cover_mask) {
    const NodeGraph& g = graph;
    const int k = popcount64(cover_mask);
    if (k == 0) return false;

    // (ii) first clause: every external parent of a member parents all members.
    uint64_t par_union = 0;
    for_each_bit(cover_mask, [&](int l) { par_union |= g.parents[l]; });
    bool parents_ok = true;
    for_each_bit(par_union & ~cover_mask, [&](int p) {
        if ((g.children[p] & cover_mask) != cover_mask) parents_ok = false;
    });
    if (!parents_ok) return false;

    // (i) candidates for C: subsets of the eligible pure-child nodes.
    const uint64_t e_mask = eligible_pure_children(cover_mask);
    const int e_size = popcount64(e_mask);
    if (e_size < k + 1) return false;

    // Pool for N: nodes adjacent to every member of the cover.
    uint64_t pool = ~uint64_t{0};
    for_each_bit(cover_mask, [&](int l) { pool &= g.adjacent[l]; });
    pool &= ~cover_mask;
    if (g.num < 64) pool &= (uint64_t{1} << g.num) - 1;
    if (popcount64(pool) < k + 1) return false;

    // Pairwise d-separation (given the cover) among all nodes that can appear
    // in C or N.
    std::vector<int> nodes;
    for_each_bit(e_mask | pool, [&](int v) { nodes.push_back(v); });
    const int nn = static_cast<int>(nodes.size());
    std::vector<int> pos(g.num, -1);
    for (int i = 0; i < nn; ++i) pos[nodes[i]] = i;
    std::vector<uint64_t> sep(nn, 0);  // sep[i] bit j: local nodes i, j d-separated given cover
    for (int i = 0; i < nn; ++i)
        for (int j = i + 1; j < nn; ++j) {
            if (d_separated_masks(g, uint64_t{1} << nodes[i], uint64_t{1} << nodes[j], cover_mask)) {
                sep[i] |= (uint64_t{1} << j);
                sep[j] |= (uint64_t{1} << i);
            }
        }

    uint64_t pool_local = 0;
    for_each_bit(pool, [&](int v) { pool_local |= (uint64_t{1} << pos[v]); });

    std::vector<int> e_nodes;
    for_each_bit(e_mask, [&](int v) { e_nodes.push_back(v); });
    const int esz = static_cast<int>(e_nodes.size());
    if (esz > 20) throw std::runtime_error("is_atomic_cover: pure-child candidate set too large");
    std::vector<uint64_t> epar(esz);
    for (int i = 0; i < esz; ++i) epar[i] = g.parents[e_nodes[i]];

    // Search C: subset of E with parent union == cover and |C| >= k+1, such
    // that at least k+1 pool nodes are d-separated from every other C member.
    const uint64_t full = (uint64_t{1} << esz) - 1;
    for (uint64_t cs = 1; cs <= full; ++cs) {
        if (popcount64(cs) < k + 1) continue;
        uint64_t pu = 0;
        for_each_bit(cs, [&](int i) { pu |= epar[i]; });
        if (pu != cover_mask) continue;

        uint64_t c_local = 0;
        for_each_bit(cs, [&](int i) { c_local |= (uint64_t{1} << pos[e_nodes[i]]); });
        int n_count = 0;
        for_each_bit(pool_local, [&](int pi) {
            uint64_t others = c_local & ~(uint64_t{1} << pi);
            if ((others & ~sep[pi]) == 0) ++n_count;
        });
        if (n_count >= k + 1) {
            if (k == 1) return true;
            // (iii) no proper partition of the cover into atomic covers.
            return !proper_partition_into_atomic(cover_mask);
        }
    }
    return false;
}

bool CoverAnalysis::proper_partition_into_atomic(uint64_t cover_mask) {
    const int lowest = __builtin_ctzll(cover_mask);
    const uint64_t rest = cover_mask & ~(uint64_t{1} << lowest);
    // First block contains the lowest element and must be a proper subset.
    uint64_t sub = (rest - 1) & rest;  // skip sub == rest (that block would be the whole cover)
    while (true) {
        uint64_t block = sub | (uint64_t{1} << lowest);
        if (is_atomic(block) && partitionable_into_atomic(cover_mask & ~block)) return true;
        if (sub == 0) break;
        sub = (sub - 1) & rest;
    }
    return false;
}

bool CoverAnalysis::partitionable_into_atomic(uint64_t mask) {
    if (mask == 0) return true;
    auto it = partition_memo_.find(mask);
    if (it != partition_memo_.end()) return it->second;
    bool ok = false;
    const int lowest = __builtin_ctzll(mask);
    const uint64_t rest = mask & ~(uint64_t{1} << lowest);
    uint64_t sub = rest;
    while (true) {
        uint64_t block = sub | (uint64_t{1} << lowest);
        if (is_atomic(block) && partitionable_into_atomic(mask & ~block)) {
            ok = true;
            break;
        }
        if (sub == 0) break;
        sub = (sub - 1) & rest;
    }
    partition_memo_[mask] = ok;
    return ok;
}

std::vector<uint64_t> CoverAnalysis::all_atomic_covers() {
    std::vector<uint64_t> out;
    const int n = graph.n;
    if (n <= 0) return out;
    if (n > 16) throw std::runtime_error("atomic_covers: too many latents for subset enumeration");
    for (uint64_t mask = 1; mask < (uint64_t{1} << n); ++mask)
        if (is_atomic(mask)) out.push_back(mask);
    return out;
}

std::vector<std::set<NodeId>> pure_children(const LatentDag& g, const std::set<NodeId>& cover) {
    if (cover.empty()) throw std::invalid_argument("pure_children: empty cover");
    const uint64_t cover_mask = latent_mask_of(g, cover);
    CoverAnalysis ca(g);
    uint64_t e = 0;
    std::vector<std::set<NodeId>> out;
    if (ca.maximal_pure_child_set(cover_mask, &e)) {
        std::set<NodeId> s;
        for_each_bit(e, [&](int v) { s.insert(g.unflat(v)); });
        out.push_back(std::move(s));
    }
    return out;
}

bool is_atomic_cover(const LatentDag& g, const std::set<NodeId>& cover) {
    if (cover.empty()) throw std::invalid_argument("is_atomic_cover: empty cover");
    const uint64_t cover_mask = latent_mask_of(g, cover);
    CoverAnalysis ca(g);
    return ca.is_atomic(cover_mask);
}

std::vector<uint64_t> atomic_covers(const LatentDag& g) {
    CoverAnalysis ca(g);
    return ca.all_atomic_covers();
}

bool satisfies_one_factor(const LatentDag& g) {
    if (g.n() < 1 || g.m() < 3) return false;
    for (int i = 0; i < g.m(); ++i)
        if (g.latent_parent_count_of_measured(i) != 1) return false;
    for (int j = 0; j < g.n(); ++j)
        if (g.measured_child_count(j) < 3) return false;
    return true;
}

bool satisfies_hierarchical(const LatentDag& g) {
    if (g.n() < 1) return false;
    NodeGraph ng(g);

    // Triangle-free skeleton: an edge whose endpoints share a neighbor closes
    // a 3-clique.
    for (int a = 0; a < ng.num; ++a) {
        uint64_t nb = ng.adjacent[a];
        bool tri = false;
        for_each_bit(nb, [&](int b) {
            if (b <= a) return;
            if (ng.adjacent[b] & nb & ~(uint64_t{1} << a)) tri = true;
        });
        if (tri) return false;
    }

    CoverAnalysis ca(g);
    std::vector<uint64_t> covers = ca.all_atomic_covers();
    uint64_t covered = 0;
    for (uint64_t c : covers) covered |= c;
    const uint64_t all_latents = (g.n() == 64) ? ~uint64_t{0} : ((uint64_t{1} << g.n()) - 1);
    if (covered != all_latents) return false;

    // Collider condition between disjoint cover pairs: if V (common colliders)
    // is non-empty, every d-separator T of the pair must satisfy
    // |V| + |T| >= |L1| + |L2|, i.e. no separator smaller than `need` exists.
    const uint64_t node_universe = (ng.num == 64) ? ~uint64_t{0} : ((uint64_t{1} << ng.num) - 1);
    for (size_t i = 0; i < covers.size(); ++i)
        for (size_t j = i + 1; j < covers.size(); ++j) {
            const uint64_t a = covers[i], b = covers[j];
            if (a & b) continue;
            int v_count = 0;
            for (int v = 0; v < ng.num; ++v)
                if ((ng.parents[v] & a) && (ng.parents[v] & b)) ++v_count;
            if (v_count == 0) continue;
            const int need = popcount64(a) + popcount64(b) - v_count;
            if (need <= 0) continue;
            const uint64_t others = node_universe & ~(a | b);
            std::vector<int> pool;
            for_each_bit(others, [&](int v) { pool.push_back(v); });
            bool small_separator = false;
            const int psz = static_cast<int>(pool.size());
            std::function<void(int, uint64_t, int)> rec = [&](int start, uint64_t zmask, int size) {
                if (small_separator) return;
                if (d_separated_masks(ng, a, b, zmask)) {
                    small_separator = true;
                    return;
                }
                if (size + 1 >= need) return;
                for (int t = start; t < psz && !small_separator; ++t)
                    rec(t + 1, zmask | (uint64_t{1} << pool[t]), size + 1);
            };
            rec(0, 0, 0);
            if (small_separator) return false;
        }
    return true;
}

}  // namespace lvcd
