#include "lvcd/enumeration.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "lvcd/covers.hpp"
#include "lvcd/operators.hpp"

namespace lvcd {

namespace {

// Row-major adjacency encoding: cell (i, j) of the n x n arc matrix maps to
// bit n*n - 1 - (i*n + j), so integer comparison of encodings equals
// lexicographic comparison of the row-major bit string.
uint64_t encode_cell(int n, int i, int j) {
    return uint64_t{1} << (n * n - 1 - (i * n + j));
}

DagFragment decode_fragment(int n, uint64_t enc) {
    DagFragment d;
    d.n = n;
    d.parents.assign(n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (enc & encode_cell(n, i, j)) d.parents[j] |= (uint64_t{1} << i);
    return d;
}

// Every labeled DAG on n nodes, encoded; generated as permutations times
// strictly-upper edge sets and deduplicated.
std::vector<uint64_t> all_labeled_dag_encodings(int n) {
    if (n < 1 || n > 6) throw std::invalid_argument("labeled-DAG enumeration supports 1..6 nodes");
    std::unordered_set<uint64_t> seen;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    const int pairs = n * (n - 1) / 2;
    do {
        for (uint64_t upper = 0; upper < (uint64_t{1} << pairs); ++upper) {
            uint64_t enc = 0;
            int t = 0;
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j, ++t)
                    if (upper & (uint64_t{1} << t)) enc |= encode_cell(n, perm[i], perm[j]);
            seen.insert(enc);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    std::vector<uint64_t> out(seen.begin(), seen.end());
    std::sort(out.begin(), out.end());
    return out;
}

// (skeleton bitmask, sorted v-structure list) of a fragment's arc matrix.
std::pair<uint64_t, std::vector<int>> fragment_signature(const DagFragment& d) {
    const int n = d.n;
    uint64_t skel = 0;
    for (int c = 0; c < n; ++c)
        for_each_bit(d.parents[c], [&](int p) {
            const int a = std::min(p, c), b = std::max(p, c);
            skel |= (uint64_t{1} << (a * n + b));
        });
    std::vector<int> vs;
    for (int c = 0; c < n; ++c) {
        std::vector<int> ps;
        for_each_bit(d.parents[c], [&](int p) { ps.push_back(p); });
        for (size_t x = 0; x < ps.size(); ++x)
            for (size_t y = x + 1; y < ps.size(); ++y) {
                const int a = std::min(ps[x], ps[y]), b = std::max(ps[x], ps[y]);
                if (!(skel & (uint64_t{1} << (a * n + b)))) vs.push_back((a * n + b) * n + c);
            }
    }
    std::sort(vs.begin(), vs.end());
    return {skel, std::move(vs)};
}

std::vector<std::pair<int, int>> fragment_edges(const DagFragment& d) {
    std::vector<std::pair<int, int>> edges;
    for (int c = 0; c < d.n; ++c)
        for_each_bit(d.parents[c], [&](int p) { edges.emplace_back(p, c); });
    return edges;
}

}  // namespace

std::vector<DagFragment> enumerate_latent_mecs(int n) {
    if (n < 1 || n > 6)
        throw std::invalid_argument("enumerate_latent_mecs: n must be between 1 and 6");
    std::map<std::pair<uint64_t, std::vector<int>>, uint64_t> best;
    for (uint64_t enc : all_labeled_dag_encodings(n)) {
        DagFragment d = decode_fragment(n, enc);
        auto sig = fragment_signature(d);
        auto it = best.find(sig);
        if (it == best.end())
            best.emplace(std::move(sig), enc);
        else if (enc < it->second)
            it->second = enc;
    }
    std::vector<uint64_t> encs;
    encs.reserve(best.size());
    for (const auto& [sig, enc] : best) encs.push_back(enc);
    std::sort(encs.begin(), encs.end());
    std::vector<DagFragment> out;
    out.reserve(encs.size());
    for (uint64_t enc : encs) out.push_back(decode_fragment(n, enc));
    return out;
}

long ordered_partitions(int item_count, int k, int min_size,
                        const std::function<void(const std::vector<uint64_t>&)>& visit) {
    if (item_count < 0 || item_count > 62)
        throw std::invalid_argument("ordered_partitions: item count must be in [0, 62]");
    if (k < 1) throw std::invalid_argument("ordered_partitions: k must be >= 1");
    if (min_size < 0) throw std::invalid_argument("ordered_partitions: min_size must be >= 0");
    const int eff_min = std::max(1, min_size);
    if (static_cast<long>(k) * eff_min > item_count) return 0;

    const uint64_t all = item_count == 0 ? 0 : ((uint64_t{1} << item_count) - 1);
    std::vector<uint64_t> blocks(k, 0);
    long count = 0;
    auto rec = [&](auto&& self, int block, uint64_t rem) -> void {
        if (block == k - 1) {
            blocks[block] = rem;
            ++count;
            if (visit) visit(blocks);
            return;
        }
        const int blocks_after = k - 1 - block;
        for (uint64_t s = rem;; s = (s - 1) & rem) {
            if (popcount64(s) >= eff_min &&
                popcount64(rem & ~s) >= blocks_after * eff_min) {
                blocks[block] = s;
                self(self, block + 1, rem & ~s);
            }
            if (s == 0) break;
        }
    };
    if (popcount64(all) >= k * eff_min) rec(rec, 0, all);
    return count;
}

long for_each_cover_partition(int n,
                              const std::function<void(const std::vector<uint64_t>&)>& visit) {
    if (n < 0 || n > 62)
        throw std::invalid_argument("for_each_cover_partition: n must be in [0, 62]");
    long count = 0;
    std::vector<int> assign(n, 0);
    auto emit = [&](int num_blocks) {
        std::vector<uint64_t> blocks(num_blocks, 0);
        for (int i = 0; i < n; ++i) blocks[assign[i]] |= (uint64_t{1} << i);
        ++count;
        if (visit) visit(blocks);
    };
    auto rec = [&](auto&& self, int i, int max_used) -> void {
        if (i == n) {
            emit(max_used + 1);
            return;
        }
        for (int v = 0; v <= max_used + 1; ++v) {
            assign[i] = v;
            self(self, i + 1, std::max(max_used, v));
        }
    };
    if (n == 0) {
        ++count;
        if (visit) visit({});
    } else {
        rec(rec, 0, -1);
    }
    return count;
}

std::vector<std::vector<uint64_t>> enumerate_cover_partitions(int n) {
    if (n > 12)
        throw std::invalid_argument("enumerate_cover_partitions: n > 12 would materialize too much");
    std::vector<std::vector<uint64_t>> out;
    for_each_cover_partition(n, [&](const std::vector<uint64_t>& blocks) { out.push_back(blocks); });
    return out;
}

std::vector<LatentDag> enumerate_one_factor(const EnumerationConfig& cfg) {
    if (cfg.mode != EnumerationMode::OneFactor)
        throw std::invalid_argument("enumerate_one_factor: config mode mismatch");
    if (cfg.m < 3) throw std::invalid_argument("enumerate_one_factor: m must be >= 3");
    if (cfg.m > 62) throw std::invalid_argument("enumerate_one_factor: m too large");
    const int n_cap = cfg.n_max > 0 ? cfg.n_max : cfg.m / 3;
    if (n_cap < 1) throw std::invalid_argument("enumerate_one_factor: n_max must be >= 1");

    std::vector<LatentDag> out;
    std::set<std::vector<uint64_t>> seen;
    for (int n = 1; n <= n_cap; ++n) {
        if (3 * n > cfg.m) break;  // every latent needs three children
        for (const DagFragment& frag : enumerate_latent_mecs(n)) {
            const std::vector<std::pair<int, int>> lat_edges = fragment_edges(frag);
            ordered_partitions(cfg.m, n, 3, [&](const std::vector<uint64_t>& blocks) {
                std::vector<std::pair<int, int>> meas;
                for (int j = 0; j < n; ++j)
                    for_each_bit(blocks[j], [&](int i) { meas.emplace_back(j, i); });
                LatentDag g = build_latent_dag(cfg.m, n, lat_edges, meas);
                if (cfg.dedupe && !seen.insert(mec_signature(g)).second) return;
                out.push_back(std::move(g));
            });
        }
    }
    return out;
}

std::vector<LatentDag> enumerate_hierarchical(const EnumerationConfig& cfg) {
    if (cfg.mode != EnumerationMode::Hierarchical)
        throw std::invalid_argument("enumerate_hierarchical: config mode mismatch");
    if (cfg.m < 1 || cfg.m > 62) throw std::invalid_argument("enumerate_hierarchical: bad m");
    if (cfg.n_max < 1)
        throw std::invalid_argument("enumerate_hierarchical: n_max must be set to >= 1");
    if (cfg.m + cfg.n_max > 62)
        throw std::invalid_argument("enumerate_hierarchical: m + n_max too large");
    if (cfg.candidate_cap < 1)
        throw std::invalid_argument("enumerate_hierarchical: candidate_cap must be >= 1");

    const int m = cfg.m;
    std::vector<LatentDag> out;
    std::set<std::vector<uint64_t>> seen;
    long assembled = 0;
    std::map<int, std::vector<DagFragment>> dag_cache;
    auto labeled_dags = [&](int l) -> const std::vector<DagFragment>& {
        auto it = dag_cache.find(l);
        if (it == dag_cache.end()) {
            std::vector<DagFragment> dags;
            for (uint64_t enc : all_labeled_dag_encodings(l)) dags.push_back(decode_fragment(l, enc));
            it = dag_cache.emplace(l, std::move(dags)).first;
        }
        return it->second;
    };

    for (int n = 1; n <= cfg.n_max; ++n) {
        for_each_cover_partition(n, [&](const std::vector<uint64_t>& blocks) {
            const int l = static_cast<int>(blocks.size());
            std::vector<int> bsize(l);
            for (int b = 0; b < l; ++b) bsize[b] = popcount64(blocks[b]);

            for (const DagFragment& d : labeled_dags(l)) {
                // Block-level undirected adjacency.
                std::vector<uint64_t> badj(l, 0);
                for (int c = 0; c < l; ++c)
                    for_each_bit(d.parents[c], [&](int p) {
                        badj[p] |= (uint64_t{1} << c);
                        badj[c] |= (uint64_t{1} << p);
                    });
                auto independent = [&](uint64_t set_mask) {
                    bool ok = true;
                    for_each_bit(set_mask, [&](int a) {
                        if (badj[a] & set_mask) ok = false;
                    });
                    return ok;
                };
                // A triangle among blocks, or a block whose parents are
                // mutually adjacent, expands into a triangle among latents;
                // the assembled graph could never pass the skeleton check.
                bool ok = true;
                for (int a = 0; a < l && ok; ++a)
                    for_each_bit(badj[a], [&](int b) {
                        if (b > a && (badj[a] & badj[b])) ok = false;
                    });
                for (int c = 0; c < l && ok; ++c)
                    if (!independent(d.parents[c])) ok = false;
                if (!ok) continue;

                // Parent-set choices for a measured variable: independent
                // block sets (including none).
                std::vector<uint64_t> choices;
                for (uint64_t s = 0; s < (uint64_t{1} << l); ++s)
                    if (independent(s)) choices.push_back(s);

                // Per-latent structure implied by the block expansion.
                std::vector<int> block_of(n, 0);
                for (int b = 0; b < l; ++b)
                    for_each_bit(blocks[b], [&](int v) { block_of[v] = b; });
                std::vector<uint64_t> latadj(n, 0), latpar(n, 0), latchl(n, 0);
                for (int c = 0; c < l; ++c)
                    for_each_bit(d.parents[c], [&](int p) {
                        for_each_bit(blocks[c], [&](int v) {
                            latpar[v] |= blocks[p];
                            latadj[v] |= blocks[p];
                        });
                        for_each_bit(blocks[p], [&](int v) {
                            latchl[v] |= blocks[c];
                            latadj[v] |= blocks[c];
                        });
                    });
                std::vector<uint64_t> latdesc = latchl;
                for (bool changed = true; changed;) {
                    changed = false;
                    for (int v = 0; v < n; ++v) {
                        uint64_t acc = latdesc[v];
                        for_each_bit(latdesc[v], [&](int c) { acc |= latdesc[c]; });
                        if (acc != latdesc[v]) {
                            latdesc[v] = acc;
                            changed = true;
                        }
                    }
                }
                std::vector<uint64_t> expand(uint64_t{1} << l, 0);
                for (uint64_t s = 1; s < (uint64_t{1} << l); ++s) {
                    const int b = __builtin_ctzll(s);
                    expand[s] = blocks[b] | expand[s & (s - 1)];
                }
                std::vector<int> latdeg(l, 0);
                for (int b = 0; b < l; ++b)
                    for_each_bit(badj[b], [&](int b2) { latdeg[b] += bsize[b2]; });

                const uint64_t all_lat = (uint64_t{1} << n) - 1;

                // Necessary conditions for every latent to sit in some atomic
                // cover of the assembled graph (the counting clauses of the
                // cover definition, without the d-separation search): the
                // cover needs |V|+1 common-adjacent nodes, its members'
                // external parents must parent all of it, and it needs |V|+1
                // children whose parents lie inside it with parent union
                // equal to it.  Sound to reject on, far cheaper than the full
                // check, and it discards the bulk of the assignment space.
                std::vector<uint64_t> xmask(l, 0);  // per block: measured vars attached so far
                std::vector<uint64_t> xparents(m, 0);
                auto leaf_coverable = [&]() {
                    uint64_t covered = 0;
                    for (uint64_t V = 1; V <= all_lat; ++V) {
                        if ((V | covered) == covered) continue;
                        const int k = popcount64(V);
                        uint64_t pool_lat = all_lat, pool_x = ~uint64_t{0};
                        uint64_t childs_lat = 0, childs_x = 0, parext = 0;
                        for_each_bit(V, [&](int v) {
                            pool_lat &= latadj[v];
                            pool_x &= xmask[block_of[v]];
                            childs_lat |= latchl[v];
                            childs_x |= xmask[block_of[v]];
                            parext |= latpar[v];
                        });
                        pool_lat &= ~V;
                        if (popcount64(pool_lat) + popcount64(pool_x) < k + 1) continue;
                        parext &= ~V;
                        bool ok = true;
                        for_each_bit(parext, [&](int p) {
                            if ((latchl[p] & V) != V) ok = false;
                        });
                        if (!ok) continue;
                        int elig = 0;
                        uint64_t pu = 0;
                        for_each_bit(childs_lat & ~V, [&](int c) {
                            if ((latpar[c] & ~V) == 0 && (latdesc[c] & V) == 0) {
                                ++elig;
                                pu |= latpar[c];
                            }
                        });
                        for_each_bit(childs_x, [&](int i) {
                            const uint64_t pa = expand[xparents[i]];
                            if ((pa & ~V) == 0) {
                                ++elig;
                                pu |= pa;
                            }
                        });
                        if (elig >= k + 1 && pu == V) covered |= V;
                    }
                    return covered == all_lat;
                };

                auto rec = [&](auto&& self, int x) -> void {
                    // Any cover containing a latent of block b supplies at
                    // least two nodes adjacent to it, so a block that cannot
                    // reach adjacency degree two is dead.
                    for (int b = 0; b < l; ++b)
                        if (latdeg[b] + popcount64(xmask[b]) + (m - x) < 2) return;
                    if (x == m) {
                        if (!leaf_coverable()) return;
                        std::vector<std::pair<int, int>> lat_edges;
                        for (int c = 0; c < l; ++c)
                            for_each_bit(d.parents[c], [&](int p) {
                                for_each_bit(blocks[p], [&](int u) {
                                    for_each_bit(blocks[c], [&](int v) { lat_edges.emplace_back(u, v); });
                                });
                            });
                        std::vector<std::pair<int, int>> meas;
                        for (int i = 0; i < m; ++i)
                            for_each_bit(xparents[i], [&](int b) {
                                for_each_bit(blocks[b], [&](int u) { meas.emplace_back(u, i); });
                            });
                        LatentDag g = build_latent_dag(m, n, lat_edges, meas);
                        if (!satisfies_hierarchical(g)) return;
                        if (!(op_min(op_skeleton(g)) == g)) return;
                        if (cfg.dedupe && !seen.insert(mec_signature(g)).second) return;
                        if (++assembled > cfg.candidate_cap)
                            throw std::runtime_error(
                                "enumerate_hierarchical: candidate cap exceeded; raise "
                                "candidate_cap or lower n_max");
                        out.push_back(std::move(g));
                        return;
                    }
                    for (uint64_t choice : choices) {
                        xparents[x] = choice;
                        for_each_bit(choice, [&](int b) { xmask[b] |= (uint64_t{1} << x); });
                        self(self, x + 1);
                        for_each_bit(choice, [&](int b) { xmask[b] &= ~(uint64_t{1} << x); });
                    }
                    xparents[x] = 0;
                };
                rec(rec, 0);
            }
        });
    }
    return out;
}

}  // namespace lvcd
