#include <cmath>
#include <set>

#include "doctest.h"
#include "lvcd/latent_dag.hpp"
#include "lvcd/rng.hpp"
#include "lvcd/sem.hpp"
#include "test_util.hpp"

using namespace lvcd;

namespace {

// Independent covariance evaluation via the nilpotent series
// (I - C)^{-1} = sum_{k=0}^{n-1} C^k.
Eigen::MatrixXd covariance_series(const SemParameters& p) {
    const int n = static_cast<int>(p.c.rows());
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd ck = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k < n; ++k) {
        ck = (ck * p.c).eval();
        a += ck;
    }
    Eigen::MatrixXd ba = p.b * a;
    return ba * p.omega_l.asDiagonal() * ba.transpose() +
           Eigen::MatrixXd(p.omega_x.asDiagonal());
}

SemParameters random_params_for(const LatentDag& g, uint64_t seed) {
    auto rng = make_rng(seed, 11);
    return random_parameters(g, rng);
}

LatentDag complete_bipartite(int m, int n) {
    LatentDag g(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) g.set_measurement_edge(j, i);
    return g;
}

}  // namespace

TEST_CASE("implied covariance closed forms") {
    {
        SemParameters p;
        p.b = Eigen::MatrixXd::Ones(3, 1);
        p.c = Eigen::MatrixXd::Zero(1, 1);
        p.omega_l = Eigen::VectorXd::Ones(1);
        p.omega_x = Eigen::VectorXd::Ones(3);
        Eigen::MatrixXd expect = Eigen::MatrixXd::Ones(3, 3) + Eigen::MatrixXd::Identity(3, 3);
        CHECK((implied_covariance(p).sigma - expect).cwiseAbs().maxCoeff() < 1e-14);
    }
    {
        SemParameters p;
        p.b = Eigen::MatrixXd::Zero(4, 2);
        p.c = Eigen::MatrixXd::Zero(2, 2);
        p.omega_l = Eigen::VectorXd::Ones(2);
        p.omega_x = (Eigen::VectorXd(4) << 1, 2, 3, 4).finished();
        CHECK((implied_covariance(p).sigma - Eigen::MatrixXd(p.omega_x.asDiagonal()))
                  .cwiseAbs()
                  .maxCoeff() < 1e-14);
    }
}

TEST_CASE("implied covariance matches the series oracle and is PD") {
    auto rng = make_rng(1001, 0);
    for (int rep = 0; rep < 1000; ++rep) {
        int n = 1 + static_cast<int>(rng() % 4);
        int m = 2 + static_cast<int>(rng() % 5);
        LatentDag g = lvcd::testing::random_dag(rng, m, n, 0.5, 0.5);
        SemParameters p = random_parameters(g, rng);
        CovMatrix sig = implied_covariance(p);
        CHECK((sig.sigma - covariance_series(p)).cwiseAbs().maxCoeff() < 1e-9);
        CHECK_NOTHROW(validate(sig));  // symmetric PD by construction
    }
}

TEST_CASE("omega_l normalization") {
    {
        SemParameters p;
        p.b = (Eigen::VectorXd(3) << 2, 2, 2).finished();
        p.c = Eigen::MatrixXd::Zero(1, 1);
        p.omega_l = (Eigen::VectorXd(1) << 4).finished();
        p.omega_x = Eigen::VectorXd::Ones(3);
        SemParameters q = normalize_omega_l(p);
        CHECK((q.b - (Eigen::VectorXd(3) << 4, 4, 4).finished()).cwiseAbs().maxCoeff() < 1e-14);
        CHECK(q.omega_l(0) == 1.0);
        CHECK((implied_covariance(p).sigma - implied_covariance(q).sigma).cwiseAbs().maxCoeff() <
              1e-10);
    }
    auto rng = make_rng(1002, 0);
    for (int rep = 0; rep < 200; ++rep) {
        LatentDag g = lvcd::testing::random_dag(rng, 5, 3, 0.6, 0.6);
        SemParameters p = random_parameters(g, rng);
        SemParameters q = normalize_omega_l(p);
        CHECK((q.omega_l - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((implied_covariance(p).sigma - implied_covariance(q).sigma).cwiseAbs().maxCoeff() <
              1e-10);
        // exact support preservation
        for (int i = 0; i < 5; ++i)
            for (int j = 0; j < 3; ++j) CHECK((p.b(i, j) != 0) == (q.b(i, j) != 0));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK((p.c(i, j) != 0) == (q.c(i, j) != 0));
        // normalizing an already-normalized parameterization changes nothing
        SemParameters q2 = normalize_omega_l(q);
        CHECK((q2.b - q.b).cwiseAbs().maxCoeff() == 0.0);
        CHECK((q2.c - q.c).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("orthogonal transform") {
    LatentDag g = complete_bipartite(5, 2);
    g.set_latent_edge(1, 0);
    SemParameters p = normalize_omega_l(random_params_for(g, 3));

    {
        auto [b2, c2] = orthogonal_transform(p, Eigen::MatrixXd::Identity(2, 2));
        CHECK((b2 - p.b).cwiseAbs().maxCoeff() == 0.0);
        CHECK((c2 - p.c).cwiseAbs().maxCoeff() == 0.0);
    }
    {
        Eigen::MatrixXd perm(2, 2);
        perm << 0, 1, 1, 0;
        auto [b2, c2] = orthogonal_transform(p, perm);
        CHECK((b2.col(0) - p.b.col(1)).cwiseAbs().maxCoeff() == 0.0);
        CHECK((b2.col(1) - p.b.col(0)).cwiseAbs().maxCoeff() == 0.0);
        SemParameters q = p;
        q.b = b2;
        q.c = c2;  // not triangular; covariance formula still applies
        Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(2, 2) - q.c).inverse();
        Eigen::MatrixXd sig = q.b * a * a.transpose() * q.b.transpose() +
                              Eigen::MatrixXd(q.omega_x.asDiagonal());
        CHECK((sig - implied_covariance(p).sigma).cwiseAbs().maxCoeff() < 1e-10);
    }
    {
        double t = 0.7;
        Eigen::MatrixXd rot(2, 2);
        rot << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
        auto [b2, c2] = orthogonal_transform(p, rot);
        Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(2, 2) - c2).inverse();
        Eigen::MatrixXd sig =
            b2 * a * a.transpose() * b2.transpose() + Eigen::MatrixXd(p.omega_x.asDiagonal());
        CHECK((sig - implied_covariance(p).sigma).cwiseAbs().maxCoeff() < 1e-10);
    }
    CHECK_THROWS(orthogonal_transform(p, Eigen::MatrixXd::Ones(2, 2)));
}

TEST_CASE("shared-cover reduction, children side") {
    // k = 2 cover {1, 0} below root 2, three shared measured children.
    LatentDag g = build_latent_dag(3, 3, {{2, 1}, {2, 0}},
                                   {{1, 0}, {0, 0}, {1, 1}, {0, 1}, {1, 2}, {0, 2}});
    SemParameters p = normalize_omega_l(random_params_for(g, 17));
    auto [g2, p2] = reduce_shared_cover(g, p, {latent_node(1), latent_node(0)});
    CHECK(g.edge_count() - g2.edge_count() == 1);
    CHECK(!g2.measurement_edge(1, 0));  // removed: second cover member -> first child
    CHECK((implied_covariance(p2).sigma - implied_covariance(p).sigma).cwiseAbs().maxCoeff() <
          1e-8);
    CHECK_NOTHROW(validate(p2, g2));

    // k = 3, four shared children: three edges removed.
    LatentDag h = complete_bipartite(4, 3);
    SemParameters hp = normalize_omega_l(random_params_for(h, 18));
    auto [h2, hp2] = reduce_shared_cover(h, hp, {latent_node(0), latent_node(1), latent_node(2)});
    CHECK(h.edge_count() - h2.edge_count() == 3);
    CHECK(h2.latent_parent_count_of_measured(0) == 1);
    CHECK(h2.latent_parent_count_of_measured(1) == 2);
    CHECK(h2.latent_parent_count_of_measured(2) == 3);
    CHECK((implied_covariance(hp2).sigma - implied_covariance(hp).sigma).cwiseAbs().maxCoeff() <
          1e-8);
}

TEST_CASE("shared-cover reduction keeps an already-triangular block fixed") {
    LatentDag g = complete_bipartite(3, 2);
    SemParameters p;
    p.b = Eigen::MatrixXd::Zero(3, 2);
    p.b << 1.5, 0.0, 0.7, 1.2, -0.4, 0.9;  // lower triangular block, positive diagonal
    p.c = Eigen::MatrixXd::Zero(2, 2);
    p.omega_l = Eigen::VectorXd::Ones(2);
    p.omega_x = (Eigen::VectorXd(3) << 2, 3, 4).finished();
    auto [g2, p2] = reduce_shared_cover(g, p, {latent_node(0), latent_node(1)});
    CHECK(g.edge_count() - g2.edge_count() == 1);
    CHECK((p2.b - p.b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("shared-cover reduction, parent side") {
    // Cover {1, 0} has one shared child but two shared parents {3, 2}.
    LatentDag g = build_latent_dag(1, 4, {{3, 1}, {3, 0}, {2, 1}, {2, 0}},
                                   {{1, 0}, {0, 0}, {3, 0}, {2, 0}});
    // Give the roots their own scale via omega_l = 1 normalization first.
    SemParameters p = normalize_omega_l(random_params_for(g, 23));
    auto [g2, p2] = reduce_shared_cover(g, p, {latent_node(1), latent_node(0)});
    CHECK(g.edge_count() - g2.edge_count() == 1);
    CHECK(!g2.latent_edge(2, 1));  // first parent loses the second cover member
    CHECK((implied_covariance(p2).sigma - implied_covariance(p).sigma).cwiseAbs().maxCoeff() <
          1e-8);
}

TEST_CASE("shared-cover reduction rejects bad covers") {
    LatentDag g = complete_bipartite(3, 2);
    SemParameters p = normalize_omega_l(random_params_for(g, 5));
    CHECK_THROWS(reduce_shared_cover(g, p, {latent_node(0)}));  // k < 2

    LatentDag uneven = g;
    uneven.set_measurement_edge(1, 0, false);  // children now differ
    SemParameters q = normalize_omega_l(random_params_for(uneven, 6));
    CHECK_THROWS(reduce_shared_cover(uneven, q, {latent_node(0), latent_node(1)}));

    // Two latents with one shared child and no parents: neither side reaches k.
    LatentDag tiny = complete_bipartite(1, 2);
    SemParameters r = normalize_omega_l(random_params_for(tiny, 7));
    CHECK_THROWS(reduce_shared_cover(tiny, r, {latent_node(0), latent_node(1)}));
}

TEST_CASE("random parameters ranges and support") {
    LatentDag g(4, 0);
    auto rng = make_rng(8, 0);
    SemParameters p0 = random_parameters(g, rng);
    CHECK(p0.b.size() == 0);
    CHECK((p0.omega_x.array() >= 2.0).all());
    CHECK((p0.omega_x.array() <= 5.0).all());

    auto rng2 = make_rng(9, 0);
    for (int rep = 0; rep < 100; ++rep) {
        LatentDag h = lvcd::testing::random_dag(rng2, 5, 3, 0.5, 0.5);
        SemParameters p = random_parameters(h, rng2);
        CHECK_NOTHROW(validate(p, h));
        for (auto [parent, child] : h.latent_edges()) {
            double w = std::abs(p.c(child, parent));
            CHECK(w >= 0.5);
            CHECK(w <= 2.0);
        }
        for (auto [latent, meas] : h.measurement_edges()) {
            double w = std::abs(p.b(meas, latent));
            CHECK(w >= 0.5);
            CHECK(w <= 2.0);
        }
        CHECK((p.omega_l.array() >= 2.0).all());
        CHECK((p.omega_l.array() <= 5.0).all());
    }
}

TEST_CASE("sampling matches the implied covariance") {
    LatentDag g = complete_bipartite(4, 1);
    g.set_measurement_edge(0, 3, false);
    SemParameters p = random_params_for(g, 12);
    auto rng = make_rng(13, 0);
    const int t = 400000;
    Eigen::MatrixXd x = sample_data(p, t, rng);
    Eigen::RowVectorXd mean = x.colwise().mean();
    Eigen::MatrixXd centered = x.rowwise() - mean;
    Eigen::MatrixXd s = centered.transpose() * centered / t;
    Eigen::MatrixXd sigma = implied_covariance(p).sigma;
    CHECK((s - sigma).norm() / sigma.norm() < 0.02);

    // Determinism under a fixed seed.
    auto r1 = make_rng(14, 0), r2 = make_rng(14, 0);
    Eigen::MatrixXd a = sample_data(p, 50, r1), b = sample_data(p, 50, r2);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    // b = 0: columns uncorrelated.
    SemParameters z = p;
    z.b.setZero();
    auto r3 = make_rng(15, 0);
    Eigen::MatrixXd y = sample_data(z, 1000000, r3);
    Eigen::RowVectorXd ym = y.colwise().mean();
    Eigen::MatrixXd yc = y.rowwise() - ym;
    Eigen::MatrixXd corr = yc.transpose() * yc / 1000000.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (i != j) CHECK(std::abs(corr(i, j) / std::sqrt(corr(i, i) * corr(j, j))) < 0.01);
}

TEST_CASE("sem parameter json round trip") {
    LatentDag g = complete_bipartite(3, 2);
    g.set_latent_edge(1, 0);
    SemParameters p = random_params_for(g, 44);
    SemParameters q = sem_parameters_from_json(sem_parameters_to_json(p));
    CHECK((p.b - q.b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.c - q.c).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.omega_x - q.omega_x).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.omega_l - q.omega_l).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS(sem_parameters_from_json("[]"));
}
