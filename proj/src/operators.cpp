#include "lvcd/operators.hpp"

#include <set>
#include <utility>
#include <vector>

#include "lvcd/covers.hpp"

namespace lvcd {

namespace {

using EdgeSet = std::set<std::pair<int, int>>;

LatentDag rebuild(int m, int n, const EdgeSet& lat, const EdgeSet& meas) {
    return build_latent_dag(m, n, std::vector<std::pair<int, int>>(lat.begin(), lat.end()),
                            std::vector<std::pair<int, int>>(meas.begin(), meas.end()));
}

void edge_sets(const LatentDag& g, EdgeSet* lat, EdgeSet* meas) {
    for (auto [p, c] : g.latent_edges()) lat->emplace(p, c);
    for (auto [l, x] : g.measurement_edges()) meas->emplace(l, x);
}

}  // namespace

LatentDag op_skeleton(const LatentDag& g0) {
    LatentDag g = g0;
    while (true) {
        CoverAnalysis ca(g);
        const std::vector<uint64_t> covers = ca.all_atomic_covers();
        EdgeSet lat, meas;
        edge_sets(g, &lat, &meas);
        const size_t before = lat.size() + meas.size();

        for (uint64_t cover : covers) {
            uint64_t c_mask = ca.eligible_pure_children(cover);
            for (uint64_t sub : covers)
                if (sub != cover && (sub & ~cover) == 0) c_mask &= ~ca.eligible_pure_children(sub);
            for_each_bit(cover, [&](int l) {
                for_each_bit(c_mask, [&](int cf) {
                    NodeId c = g.unflat(cf);
                    if (c.kind == NodeKind::Latent)
                        lat.emplace(l, c.index);
                    else
                        meas.emplace(l, c.index);
                });
            });
        }
        if (lat.size() + meas.size() == before) return g;
        g = rebuild(g.m(), g.n(), lat, meas);
    }
}

LatentDag op_atomic(const LatentDag& g0) {
    LatentDag g = g0;
    while (true) {
        CoverAnalysis ca(g);
        const std::vector<uint64_t> covers = ca.all_atomic_covers();
        EdgeSet lat, meas;
        edge_sets(g, &lat, &meas);
        const size_t before = lat.size() + meas.size();

        for (uint64_t cover : covers) {
            if (popcount64(cover) < 2) continue;
            std::vector<int> members;
            for_each_bit(cover, [&](int l) { members.push_back(l); });
            for (size_t i = 0; i < members.size(); ++i)
                for (size_t j = i + 1; j < members.size(); ++j)
                    lat.emplace(members[j], members[i]);  // higher index parents lower
        }
        if (lat.size() + meas.size() == before) return g;
        g = rebuild(g.m(), g.n(), lat, meas);
    }
}

namespace {

// One op_min merge round; returns true and writes the reduced graph through
// `out` when some (P, L) pair merges.
bool min_round(const LatentDag& g, LatentDag* out) {
    CoverAnalysis ca(g);
    const std::vector<uint64_t> covers = ca.all_atomic_covers();
    const NodeGraph& ng = ca.graph;
    const int n = g.n();
    const uint64_t latent_mask = (n == 64) ? ~uint64_t{0} : ((uint64_t{1} << n) - 1);

    for (uint64_t p_cover : covers) {
        const uint64_t p_eligible = ca.eligible_pure_children(p_cover);
        for (uint64_t l_cover : covers) {
            if (l_cover & p_cover) continue;
            if (popcount64(l_cover) != popcount64(p_cover)) continue;
            // (i) L is a pure-child set of P: members eligible, parent union == P.
            if ((l_cover & ~latent_mask) != 0) continue;
            if ((l_cover & ~p_eligible) != 0) continue;
            uint64_t par_union = 0;
            for_each_bit(l_cover, [&](int l) { par_union |= ng.parents[l]; });
            if (par_union != p_cover) continue;

            // (iii) pure children of L form a single atomic cover, or the
            // siblings of L (other children of P) do.
            bool ok = false;
            const uint64_t l_children_all = [&] {
                uint64_t c = 0;
                for_each_bit(l_cover, [&](int l) { c |= ng.children[l]; });
                return c & ~l_cover;
            }();
            const uint64_t l_pch = ca.eligible_pure_children(l_cover);
            if (l_pch != 0 && (l_pch & ~latent_mask) == 0) {
                uint64_t pu = 0;
                for_each_bit(l_pch, [&](int v) { pu |= ng.parents[v]; });
                if (pu == l_cover && ca.is_atomic(l_pch)) ok = true;
            }
            if (!ok) {
                uint64_t sib = 0;
                for_each_bit(p_cover, [&](int pl) { sib |= ng.children[pl]; });
                sib &= ~l_cover;
                if (sib != 0 && (sib & ~latent_mask) == 0 && ca.is_atomic(sib)) ok = true;
            }
            if (!ok) continue;

            // Merge: delete L, re-attach its children to every member of P.
            std::vector<int> remap(n, -1);
            int next = 0;
            for (int j = 0; j < n; ++j)
                if (!(l_cover & (uint64_t{1} << j))) remap[j] = next++;
            EdgeSet lat, meas;
            for (auto [pp, cc] : g.latent_edges())
                if (remap[pp] >= 0 && remap[cc] >= 0) lat.emplace(remap[pp], remap[cc]);
            for (auto [ll, xx] : g.measurement_edges())
                if (remap[ll] >= 0) meas.emplace(remap[ll], xx);
            const uint64_t relink = l_children_all & ~p_cover;
            for_each_bit(p_cover, [&](int pl) {
                for_each_bit(relink, [&](int cf) {
                    NodeId c = g.unflat(cf);
                    if (c.kind == NodeKind::Latent)
                        lat.emplace(remap[pl], remap[c.index]);
                    else
                        meas.emplace(remap[pl], c.index);
                });
            });
            *out = rebuild(g.m(), next, lat, meas);
            return true;
        }
    }
    return false;
}

}  // namespace

LatentDag op_min(const LatentDag& g0) {
    LatentDag g = g0;
    LatentDag next = g;
    while (min_round(g, &next)) g = next;
    return g;
}

}  // namespace lvcd
