#include <Eigen/Dense>
#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "lvcd/dimension.hpp"
#include "lvcd/latent_dag.hpp"
#include "lvcd/rng.hpp"
#include "lvcd/sem.hpp"
#include "test_util.hpp"

using namespace lvcd;
using lvcd::testing::hierarchical_nested_covers;
using lvcd::testing::hierarchical_two_covers;
using lvcd::testing::latent_tree_8;
using lvcd::testing::one_factor_chain_11;
using lvcd::testing::random_dag;

namespace {

Eigen::VectorXd vech(const Eigen::MatrixXd& a) {
    const int m = static_cast<int>(a.rows());
    Eigen::VectorXd v(m * (m + 1) / 2);
    int k = 0;
    for (int s = 0; s < m; ++s)
        for (int r = s; r < m; ++r) v[k++] = a(r, s);
    return v;
}

// Free parameters in the covariance_jacobian column order: measurement-edge
// weights, latent-edge weights, then omega_x directly (not log).
Eigen::VectorXd flatten(const SemParameters& p, const LatentDag& g) {
    Eigen::VectorXd v(g.edge_count() + g.m());
    Eigen::Index k = 0;
    for (const auto& [j, i] : g.measurement_edges()) v[k++] = p.b(i, j);
    for (const auto& [parent, child] : g.latent_edges()) v[k++] = p.c(child, parent);
    for (int i = 0; i < g.m(); ++i) v[k++] = p.omega_x[i];
    return v;
}

SemParameters unflatten(const Eigen::VectorXd& v, const LatentDag& g) {
    SemParameters p;
    p.b = Eigen::MatrixXd::Zero(g.m(), g.n());
    p.c = Eigen::MatrixXd::Zero(g.n(), g.n());
    p.omega_x = Eigen::VectorXd::Zero(g.m());
    p.omega_l = Eigen::VectorXd::Ones(g.n());
    Eigen::Index k = 0;
    for (const auto& [j, i] : g.measurement_edges()) p.b(i, j) = v[k++];
    for (const auto& [parent, child] : g.latent_edges()) p.c(child, parent) = v[k++];
    for (int i = 0; i < g.m(); ++i) p.omega_x[i] = v[k++];
    return p;
}

// Three latents with no mutual edges sharing `children` measured children.
LatentDag single_cover_k3(int children) {
    LatentDag g(children, 3);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < children; ++i) g.set_measurement_edge(j, i);
    return g;
}

}  // namespace

TEST_CASE("one-factor degrees of freedom") {
    CHECK(dof_one_factor(one_factor_chain_11()) == 24);

    LatentDag g(3, 1);
    for (int i = 0; i < 3; ++i) g.set_measurement_edge(0, i);
    CHECK(dof_one_factor(g) == 6);

    LatentDag h(6, 2);
    h.set_latent_edge(1, 0);
    for (int i = 0; i < 3; ++i) h.set_measurement_edge(1, i);
    for (int i = 3; i < 6; ++i) h.set_measurement_edge(0, i);
    CHECK(dof_one_factor(h) == 13);

    LatentDag bad(3, 1);  // latent with no children
    CHECK_THROWS_AS((void)dof_one_factor(bad), std::invalid_argument);
}

TEST_CASE("hierarchical degrees of freedom") {
    {
        auto report = dof_hierarchical(hierarchical_two_covers());
        // 16 edges + 6 variables, minus one per two-latent shared group.
        CHECK(report.combinatorial == 20);
        REQUIRE(report.reductions.size() == 2);
        CHECK(report.reductions[0].latents == std::vector<int>{0, 1});
        CHECK(report.reductions[0].deduction == 1);
        CHECK(report.reductions[1].latents == std::vector<int>{2, 3});
        CHECK(report.reductions[1].deduction == 1);
        CHECK_FALSE(report.numeric.has_value());
    }
    {
        // No multi-latent group shares both parents and children.
        auto report = dof_hierarchical(latent_tree_8());
        CHECK(report.combinatorial == latent_tree_8().edge_count() + 8);
        CHECK(report.combinatorial == 18);
        CHECK(report.reductions.empty());
    }
    {
        // One cover of three latents sharing everything: minus 3*2/2.
        auto report = dof_hierarchical(single_cover_k3(7));
        CHECK(report.combinatorial == 21 + 7 - 3);
        REQUIRE(report.reductions.size() == 1);
        CHECK(report.reductions[0].latents == std::vector<int>{0, 1, 2});
        CHECK(report.reductions[0].deduction == 3);
    }
    {
        // With only four children the count saturates at m(m+1)/2.
        auto report = dof_hierarchical(single_cover_k3(4));
        CHECK(report.combinatorial == 10);
    }
    {
        auto report = dof_hierarchical(hierarchical_nested_covers());
        CHECK(report.combinatorial == 20);  // 22 minus one per nested cover
        CHECK(report.reductions.size() == 2);
    }
    LatentDag bad(1, 1);  // a single pure child is too few for an atomic cover
    bad.set_measurement_edge(0, 0);
    CHECK_THROWS_AS((void)dof_hierarchical(bad), std::invalid_argument);
}

TEST_CASE("upper bound on the model dimension") {
    LatentDag g(3, 1);
    for (int i = 0; i < 3; ++i) g.set_measurement_edge(0, i);
    CHECK(dof_upper_bound(g) == 6);  // min(3 + 3, 6)

    LatentDag h(3, 3);  // 10 edges on 3 measured variables
    h.set_latent_edge(2, 1);
    h.set_latent_edge(2, 0);
    h.set_latent_edge(1, 0);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            if (j > 0 || i < 1) h.set_measurement_edge(j, i);
    REQUIRE(h.edge_count() == 10);
    CHECK(dof_upper_bound(h) == 6);

    CHECK(dof_upper_bound(one_factor_chain_11()) >= 24);
}

TEST_CASE("analytic jacobian matches finite differences of the covariance") {
    auto rng = make_rng(909);
    const double h = 1e-5;
    for (int trial = 0; trial < 30; ++trial) {
        const int m = 2 + trial % 4;
        const int n = trial % 4;
        LatentDag g = random_dag(rng, m, n, 0.5, 0.5);
        SemParameters p = random_parameters(g, rng);
        p.omega_l.setOnes();
        const Eigen::MatrixXd jac = covariance_jacobian(g, p);
        const Eigen::VectorXd theta = flatten(p, g);
        REQUIRE(jac.cols() == theta.size());
        for (Eigen::Index k = 0; k < theta.size(); ++k) {
            Eigen::VectorXd tp = theta, tm = theta;
            tp[k] += h;
            tm[k] -= h;
            const Eigen::VectorXd fd =
                (vech(implied_covariance(unflatten(tp, g)).sigma) -
                 vech(implied_covariance(unflatten(tm, g)).sigma)) /
                (2.0 * h);
            for (Eigen::Index r = 0; r < fd.size(); ++r) {
                const double denom = std::max({1.0, std::abs(jac(r, k)), std::abs(fd[r])});
                CHECK(std::abs(jac(r, k) - fd[r]) <= 1e-5 * denom);
            }
        }
    }
}

TEST_CASE("numeric rank of simple maps") {
    auto rng = make_rng(17);
    CHECK(dof_numeric(LatentDag(3, 0), 3, rng) == 3);  // only omega_x is free
    CHECK(dof_numeric(one_factor_chain_11(), 5, rng) == 24);
    // Nested 2-covers: the rank matches the combinatorial count.
    CHECK(dof_numeric(hierarchical_nested_covers(), 5, rng) == 20);
    // When both 2-covers hang off a single root latent, the cross-cover
    // covariance block is rank-one and three more dimensions collapse; the
    // combinatorial count (20) is only an upper bound here.
    CHECK(dof_numeric(hierarchical_two_covers(), 5, rng) == 17);
}

TEST_CASE("numeric rank equals the closed form on one-factor graphs") {
    std::vector<LatentDag> graphs;
    {
        LatentDag g(6, 1);
        for (int i = 0; i < 6; ++i) g.set_measurement_edge(0, i);
        graphs.push_back(g);
    }
    {
        LatentDag g(6, 2);
        g.set_latent_edge(1, 0);
        for (int i = 0; i < 3; ++i) g.set_measurement_edge(1, i);
        for (int i = 3; i < 6; ++i) g.set_measurement_edge(0, i);
        graphs.push_back(g);
    }
    {
        LatentDag g(9, 3);
        g.set_latent_edge(2, 1);
        g.set_latent_edge(1, 0);
        for (int i = 0; i < 3; ++i) g.set_measurement_edge(2, i);
        for (int i = 3; i < 6; ++i) g.set_measurement_edge(1, i);
        for (int i = 6; i < 9; ++i) g.set_measurement_edge(0, i);
        graphs.push_back(g);
    }
    {
        LatentDag g(7, 2);  // no latent edge, blocks of 3 and 4
        for (int i = 0; i < 3; ++i) g.set_measurement_edge(1, i);
        for (int i = 3; i < 7; ++i) g.set_measurement_edge(0, i);
        graphs.push_back(g);
    }
    auto rng = make_rng(23);
    for (const auto& g : graphs) CHECK(dof_numeric(g, 5, rng) == dof_one_factor(g));
}

TEST_CASE("numeric rank never exceeds the bounds") {
    auto rng = make_rng(5150);
    for (int trial = 0; trial < 50; ++trial) {
        LatentDag g = random_dag(rng, 2 + trial % 5, trial % 4, 0.5, 0.5);
        const long numeric = dof_numeric(g, 2, rng);
        CHECK(numeric <= dof_upper_bound(g));
    }
    // On hierarchical graphs the combinatorial count is also an upper bound.
    // It is conjectured tight for canonical graphs; equality is logged, not
    // asserted, and indeed fails for hierarchical_two_covers (17 < 20).
    for (const auto& g :
         {hierarchical_two_covers(), hierarchical_nested_covers(), latent_tree_8(),
          single_cover_k3(7), single_cover_k3(4)}) {
        const auto report = dof_hierarchical(g);
        const long numeric = dof_numeric(g, 5, rng);
        CHECK(numeric <= report.combinatorial);
        if (numeric != report.combinatorial)
            MESSAGE("rank ", numeric, " below the combinatorial count ",
                    report.combinatorial, " (m=", g.m(), ", n=", g.n(), ")");
    }
    // Equality does hold on these canonical structures.
    for (const auto& g :
         {hierarchical_nested_covers(), latent_tree_8(), single_cover_k3(7),
          single_cover_k3(4), single_cover_k3(6)}) {
        CHECK(dof_numeric(g, 5, rng) == dof_hierarchical(g).combinatorial);
    }
}

TEST_CASE("shared-cover reduction preserves the model dimension") {
    auto rng = make_rng(321);
    const LatentDag g = hierarchical_two_covers();
    SemParameters p = random_parameters(g, rng);
    p.omega_l.setOnes();
    auto [reduced, q] = reduce_shared_cover(g, p, {latent_node(3), latent_node(2)});
    CHECK(reduced.edge_count() == g.edge_count() - 1);
    CHECK(dof_numeric(reduced, 5, rng) == dof_numeric(g, 5, rng));
}
