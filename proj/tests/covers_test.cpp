#include <set>
#include <vector>

#include "doctest.h"
#include "lvcd/covers.hpp"
#include "lvcd/latent_dag.hpp"
#include "lvcd/operators.hpp"
#include "test_util.hpp"

using namespace lvcd;
using lvcd::testing::hierarchical_two_covers;
using lvcd::testing::latent_tree_8;
using lvcd::testing::one_factor_chain_11;
using lvcd::testing::redundant_singleton_graph;

namespace {

// Root L1 (=2) over the cover {A=1, B=0}; X0..X2 are children of both cover
// members, X3 of A only.
LatentDag partial_cover_graph() {
    return build_latent_dag(4, 3, {{2, 1}, {2, 0}},
                            {{1, 0}, {0, 0}, {1, 1}, {0, 1}, {1, 2}, {0, 2}, {1, 3}});
}




}  // namespace

TEST_CASE("pure children") {
    {
        LatentDag g(3, 1);
        for (int i = 0; i < 3; ++i) g.set_measurement_edge(0, i);
        auto pc = pure_children(g, {latent_node(0)});
        REQUIRE(pc.size() == 1);
        CHECK(pc[0] == std::set<NodeId>{measured_node(0), measured_node(1), measured_node(2)});
    }
    {
        // X0 has parents {L0, L1}: not a pure child of {L0} alone.
        LatentDag g(1, 2);
        g.set_measurement_edge(0, 0);
        g.set_measurement_edge(1, 0);
        CHECK(pure_children(g, {latent_node(0)}).empty());
        // But it is a pure child of the pair.
        auto pc = pure_children(g, {latent_node(0), latent_node(1)});
        REQUIRE(pc.size() == 1);
        CHECK(pc[0] == std::set<NodeId>{measured_node(0)});
    }
    {
        // The maximal set keeps partially-parented members whose parents stay
        // inside the cover.
        LatentDag g = partial_cover_graph();
        auto pc = pure_children(g, {latent_node(1), latent_node(0)});
        REQUIRE(pc.size() == 1);
        CHECK(pc[0] == std::set<NodeId>{measured_node(0), measured_node(1), measured_node(2),
                                        measured_node(3)});
    }
    {
        LatentDag g(2, 1);
        CHECK_THROWS(pure_children(g, {measured_node(0)}));
        CHECK_THROWS(pure_children(g, {}));
    }
}

TEST_CASE("atomic covers") {
    {
        LatentDag g(3, 1);
        for (int i = 0; i < 3; ++i) g.set_measurement_edge(0, i);
        CHECK(is_atomic_cover(g, {latent_node(0)}));
    }
    {
        // Pair with only two shared pure children: |C| = 2 < k+1 = 3.
        LatentDag g(2, 2);
        for (int i = 0; i < 2; ++i) {
            g.set_measurement_edge(0, i);
            g.set_measurement_edge(1, i);
        }
        CHECK(!is_atomic_cover(g, {latent_node(0), latent_node(1)}));
    }
    {
        LatentDag g = hierarchical_two_covers();
        CHECK(is_atomic_cover(g, {latent_node(3), latent_node(2)}));
        CHECK(is_atomic_cover(g, {latent_node(1), latent_node(0)}));
        CHECK(is_atomic_cover(g, {latent_node(4)}));
        CHECK(!is_atomic_cover(g, {latent_node(3)}));
        CHECK(!is_atomic_cover(g, {latent_node(3), latent_node(2), latent_node(1)}));
        auto covers = atomic_covers(g);
        CHECK(covers == std::vector<uint64_t>{0b00011, 0b01100, 0b10000});
    }
    {
        // A 2-cover whose external parent reaches only one member is not
        // atomic.
        LatentDag g = build_latent_dag(
            3, 3, {{2, 1}},
            {{1, 0}, {0, 0}, {1, 1}, {0, 1}, {1, 2}, {0, 2}});
        CHECK(!is_atomic_cover(g, {latent_node(1), latent_node(0)}));
    }
}

TEST_CASE("one-factor model check") {
    LatentDag g = one_factor_chain_11();
    CHECK(satisfies_one_factor(g));

    LatentDag two_parents = g;
    two_parents.set_measurement_edge(1, 0);  // X0 now has two latent parents
    CHECK(!satisfies_one_factor(two_parents));

    LatentDag small(5, 2);  // latent 1 has only 2 children
    for (int i = 0; i < 3; ++i) small.set_measurement_edge(0, i);
    small.set_measurement_edge(1, 3);
    small.set_measurement_edge(1, 4);
    CHECK(!satisfies_one_factor(small));

    LatentDag childless(3, 2);  // latent 1 has no children at all
    for (int i = 0; i < 3; ++i) childless.set_measurement_edge(0, i);
    CHECK(!satisfies_one_factor(childless));
}

TEST_CASE("hierarchical model check") {
    CHECK(satisfies_hierarchical(hierarchical_two_covers()));
    CHECK(satisfies_hierarchical(one_factor_chain_11()));
    CHECK(satisfies_hierarchical(redundant_singleton_graph()));

    {
        // Triangle L1 -> L0 -> X0 plus L1 -> X0.
        LatentDag g = build_latent_dag(1, 2, {{1, 0}}, {{1, 0}, {0, 0}});
        CHECK(!satisfies_hierarchical(g));
    }
    {
        // One latent with a single child is in no atomic cover.
        LatentDag g(1, 1);
        g.set_measurement_edge(0, 0);
        CHECK(!satisfies_hierarchical(g));
    }
}

TEST_CASE("skeleton operator completes partial pure-child edges") {
    LatentDag g = partial_cover_graph();
    LatentDag closed = op_skeleton(g);

    LatentDag expect = g;
    expect.set_measurement_edge(0, 3);  // B -> X3 added; cover {A, B} owns X3
    CHECK(closed == expect);
    CHECK(op_skeleton(closed) == closed);  // idempotent

    // One-factor structures are already closed.
    LatentDag of = one_factor_chain_11();
    CHECK(op_skeleton(of) == of);
}

TEST_CASE("minimal-graph operator merges a redundant singleton") {
    LatentDag g = redundant_singleton_graph();
    LatentDag reduced = op_min(g);

    LatentDag expect = build_latent_dag(
        6, 3, {{2, 1}, {2, 0}},
        {{1, 0}, {0, 0}, {1, 1}, {0, 1}, {1, 2}, {0, 2}, {2, 3}, {2, 4}, {2, 5}});
    CHECK(reduced == expect);
    CHECK(op_min(reduced) == reduced);

    // Chain where the root keeps its own measured children: the candidate's
    // pure children are measured and its siblings are measured, so no merge.
    LatentDag chain = build_latent_dag(5, 2, {{1, 0}},
                                       {{0, 0}, {0, 1}, {0, 2}, {1, 3}, {1, 4}});
    CHECK(op_min(chain) == chain);

    // One-factor structures have no all-latent pure-child cover pairs.
    LatentDag of = one_factor_chain_11();
    CHECK(op_min(of) == of);
}

TEST_CASE("intra-cover operator fully connects multi-member covers") {
    LatentDag g = redundant_singleton_graph();
    LatentDag connected = op_atomic(g);

    LatentDag expect = g;
    expect.set_latent_edge(2, 1);  // inside the cover {2, 1}
    CHECK(connected == expect);
    CHECK(op_atomic(connected) == connected);

    LatentDag of = one_factor_chain_11();  // all covers singletons
    CHECK(op_atomic(of) == of);

    LatentDag h = hierarchical_two_covers();
    LatentDag h2 = op_atomic(h);
    LatentDag hexpect = h;
    hexpect.set_latent_edge(3, 2);
    hexpect.set_latent_edge(1, 0);
    CHECK(h2 == hexpect);
}

TEST_CASE("hierarchical ground-truth graphs are canonical") {
    for (LatentDag g : {hierarchical_two_covers(), latent_tree_8()}) {
        CHECK(satisfies_hierarchical(g));
        CHECK(op_min(op_skeleton(g)) == g);
    }
}
