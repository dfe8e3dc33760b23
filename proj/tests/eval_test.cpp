#include "lvcd/eval.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "lvcd/covers.hpp"
#include "lvcd/dimension.hpp"
#include "lvcd/enumeration.hpp"
#include "lvcd/latent_dag.hpp"
#include "lvcd/operators.hpp"
#include "lvcd/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using lvcd::BenchmarkConfig;
using lvcd::BenchmarkMethod;
using lvcd::Cpdag;
using lvcd::LatentDag;
using lvcd::MetricRow;
using lvcd::TruthClass;
using lvcd::build_latent_dag;
using lvcd::builtin_ground_truth;
using lvcd::builtin_ground_truths;
using lvcd::dof_hierarchical;
using lvcd::dof_numeric;
using lvcd::f1_skeleton;
using lvcd::make_rng;
using lvcd::markov_equivalent;
using lvcd::metric_rows_csv;
using lvcd::metric_rows_table;
using lvcd::op_min;
using lvcd::op_skeleton;
using lvcd::random_hierarchical_dag;
using lvcd::run_benchmark;
using lvcd::satisfies_hierarchical;
using lvcd::satisfies_one_factor;
using lvcd::shd_mec;
using lvcd::testing::random_dag;

namespace {

// Rebuild with latent labels pushed through `perm`; the constructor then
// re-canonicalizes, so the result is the same structure under new labels.
LatentDag relabel_latents(const LatentDag& g, const std::vector<int>& perm) {
    std::vector<std::pair<int, int>> lat, meas;
    for (auto [p, c] : g.latent_edges()) lat.push_back({perm[p], perm[c]});
    for (auto [l, x] : g.measurement_edges()) meas.push_back({perm[l], x});
    return build_latent_dag(g.m(), g.n(), lat, meas);
}

// Adjacency states of a CPDAG keyed by unordered flat node pair:
// 1 = undirected, 2 = directed low->high, 3 = directed high->low.
std::map<std::pair<int, int>, int> pair_states(const Cpdag& c) {
    std::map<std::pair<int, int>, int> st;
    for (auto [a, b] : c.undirected) st[{a, b}] = 1;
    for (auto [from, to] : c.directed)
        st[{std::min(from, to), std::max(from, to)}] = from < to ? 2 : 3;
    return st;
}

// The same states with latent ids pushed through `perm` (measured ids are
// offset by the latent count and keep their positions).
std::map<std::pair<int, int>, int> permute_states(const std::map<std::pair<int, int>, int>& st,
                                                  const std::vector<int>& perm) {
    const int n = static_cast<int>(perm.size());
    std::map<std::pair<int, int>, int> out;
    for (const auto& [key, state] : st) {
        int a = key.first < n ? perm[key.first] : key.first;
        int b = key.second < n ? perm[key.second] : key.second;
        int s = state;
        if (a > b) {
            std::swap(a, b);
            if (s == 2) s = 3;
            else if (s == 3) s = 2;
        }
        out[{a, b}] = s;
    }
    return out;
}

long state_mismatches(const std::map<std::pair<int, int>, int>& a,
                      const std::map<std::pair<int, int>, int>& b) {
    long d = 0;
    for (const auto& [key, state] : a) {
        auto it = b.find(key);
        if (it == b.end() || it->second != state) ++d;
    }
    for (const auto& [key, state] : b)
        if (a.find(key) == a.end()) ++d;
    return d;
}

// Structural-Hamming distance between equivalence classes by brute force:
// CPDAGs from exhaustive orientation enumeration, minimized over every
// permutation of the (equal-count) latent labels.
long shd_mec_bruteforce(const LatentDag& est, const LatentDag& truth) {
    const auto est_states = pair_states(lvcd::oracle::cpdag_bruteforce(est));
    const auto truth_states = pair_states(lvcd::oracle::cpdag_bruteforce(truth));
    std::vector<int> perm(est.n());
    for (int i = 0; i < est.n(); ++i) perm[i] = i;
    long best = -1;
    do {
        const long d = state_mismatches(permute_states(est_states, perm), truth_states);
        if (best < 0 || d < best) best = d;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

bool same_metrics(const MetricRow& a, const MetricRow& b) {
    return a.truth_id == b.truth_id && a.method == b.method && a.sample_size == b.sample_size &&
           a.valid_trials == b.valid_trials && a.invalid_trials == b.invalid_trials &&
           a.f1_mean == b.f1_mean && a.f1_std == b.f1_std && a.shd_mean == b.shd_mean &&
           a.shd_std == b.shd_std;
}

}  // namespace

TEST_CASE("skeleton F1 handles identical, empty, and mismatched graphs") {
    for (auto cls : {TruthClass::OneFactor, TruthClass::Hierarchical})
        for (const auto& gt : builtin_ground_truths(cls)) {
            CHECK(f1_skeleton(gt.graph, gt.graph) == 1.0);
            CHECK(shd_mec(gt.graph, gt.graph) == 0.0);
        }

    const LatentDag pair_truth = builtin_ground_truth("one-factor-pair").graph;
    CHECK(f1_skeleton(LatentDag(6, 2), pair_truth) == 0.0);
    CHECK(f1_skeleton(LatentDag(6, 1), LatentDag(6, 2)) == 1.0);
    CHECK(shd_mec(LatentDag(6, 1), LatentDag(6, 2)) == 0.0);

    const LatentDag short_graph(5, 1);
    CHECK_THROWS_AS((void)f1_skeleton(short_graph, pair_truth), std::invalid_argument);
    CHECK_THROWS_AS((void)shd_mec(short_graph, pair_truth), std::invalid_argument);
}

TEST_CASE("skeleton F1 matches hand-computed merge and move errors") {
    const LatentDag pair_truth = builtin_ground_truth("one-factor-pair").graph;
    const LatentDag single = builtin_ground_truth("one-factor-single").graph;

    // Merging both factors keeps 3 of 6 estimated edges after the best
    // injection: F1 = 2*3 / (6 + 7).
    CHECK(f1_skeleton(single, pair_truth) == doctest::Approx(6.0 / 13.0));

    // Moving one child across factors keeps 6 of 7 edges on both sides.
    const LatentDag moved = build_latent_dag(
        6, 2, {{1, 0}}, {{0, 0}, {0, 1}, {1, 2}, {1, 3}, {1, 4}, {1, 5}});
    CHECK(f1_skeleton(moved, pair_truth) == doctest::Approx(6.0 / 7.0));

    // Swapping latent labels is a relabeling of the same structure.
    CHECK(f1_skeleton(relabel_latents(pair_truth, {1, 0}), pair_truth) == 1.0);
    CHECK(shd_mec(relabel_latents(pair_truth, {1, 0}), pair_truth) == 0.0);
}

TEST_CASE("MEC SHD matches hand-computed class distances") {
    const LatentDag pair_truth = builtin_ground_truth("one-factor-pair").graph;
    const LatentDag single = builtin_ground_truth("one-factor-single").graph;

    // Dropping the factor-factor edge: both classes are fully undirected
    // (no colliders anywhere), so exactly one adjacency differs.
    const LatentDag split = build_latent_dag(
        6, 2, {}, {{0, 0}, {0, 1}, {0, 2}, {1, 3}, {1, 4}, {1, 5}});
    CHECK(shd_mec(split, pair_truth) == 1.0);

    // One factor over everything vs. two linked factors: the best injection
    // still mismatches 3 + 4 adjacencies.
    CHECK(shd_mec(single, pair_truth) == 7.0);

    // Reversing one chain edge creates a collider; the collider's latent
    // pair states and its three compelled child edges all differ.
    std::vector<std::pair<int, int>> meas;
    for (int i = 0; i < 3; ++i) meas.push_back({0, i});
    for (int i = 3; i < 6; ++i) meas.push_back({1, i});
    for (int i = 6; i < 9; ++i) meas.push_back({2, i});
    const LatentDag chain = build_latent_dag(9, 3, {{2, 1}, {1, 0}}, meas);
    const LatentDag collider = build_latent_dag(9, 3, {{2, 1}, {0, 1}}, meas);
    CHECK(shd_mec(collider, chain) == 5.0);
}

TEST_CASE("MEC SHD agrees with the brute-force class distance on random graphs") {
    auto rng = make_rng(314159);
    std::uniform_int_distribution<int> m_dist(3, 6), n_dist(1, 3);
    int done = 0;
    while (done < 40) {
        const int m = m_dist(rng), n = n_dist(rng);
        const LatentDag est = random_dag(rng, m, n);
        const LatentDag truth = random_dag(rng, m, n);
        CAPTURE(done);
        CHECK(shd_mec(est, truth) == static_cast<double>(shd_mec_bruteforce(est, truth)));
        ++done;
    }
}

TEST_CASE("evaluation metrics are invariant under latent relabeling") {
    auto rng = make_rng(2718);
    for (int trial = 0; trial < 30; ++trial) {
        const int m = 4 + static_cast<int>(rng() % 3);
        const int n = 2 + static_cast<int>(rng() % 2);
        const LatentDag est = random_dag(rng, m, n);
        const LatentDag truth = random_dag(rng, m, n);
        std::vector<int> perm(n);
        for (int i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        const LatentDag est2 = relabel_latents(est, perm);

        CAPTURE(trial);
        CHECK(f1_skeleton(est2, truth) == f1_skeleton(est, truth));
        CHECK(shd_mec(est2, truth) == shd_mec(est, truth));
        CHECK(f1_skeleton(est, est2) == 1.0);
        CHECK(shd_mec(est, est2) == 0.0);
    }
}

TEST_CASE("MEC SHD vanishes exactly on Markov-equivalent one-factor structures") {
    lvcd::EnumerationConfig cfg;
    cfg.m = 6;
    cfg.dedupe = false;
    const auto all = enumerate_one_factor(cfg);
    REQUIRE(all.size() == 41);
    for (size_t i = 0; i < all.size(); ++i)
        for (size_t j = i + 1; j < all.size(); ++j) {
            CAPTURE(i);
            CAPTURE(j);
            CHECK((shd_mec(all[i], all[j]) == 0.0) == markov_equivalent(all[i], all[j]));
        }
}

TEST_CASE("builtin ground truths are canonical members of their class") {
    const auto one_factor = builtin_ground_truths(TruthClass::OneFactor);
    REQUIRE(one_factor.size() == 4);
    CHECK(one_factor[0].id == "one-factor-single");
    CHECK(one_factor[1].id == "one-factor-pair");
    CHECK(one_factor[2].id == "one-factor-chain");
    CHECK(one_factor[3].id == "one-factor-split");
    for (const auto& gt : one_factor) {
        CAPTURE(gt.id);
        CHECK(satisfies_one_factor(gt.graph));
        CHECK(op_min(op_skeleton(gt.graph)) == gt.graph);
    }

    const auto hier = builtin_ground_truths(TruthClass::Hierarchical);
    REQUIRE(hier.size() == 3);
    for (const auto& gt : hier) {
        CAPTURE(gt.id);
        CHECK(satisfies_hierarchical(gt.graph));
        CHECK_FALSE(satisfies_one_factor(gt.graph));
        CHECK(op_min(op_skeleton(gt.graph)) == gt.graph);
    }

    // Two nested size-2 covers: 16 edges + 6 noise terms - one rotation per
    // cover leaves 20 free dimensions.
    const auto& nested = builtin_ground_truth("hierarchical-nested-covers").graph;
    const long edges =
        static_cast<long>(nested.latent_edges().size() + nested.measurement_edges().size());
    CHECK(edges + nested.m() - 2 == 20);
    CHECK(dof_hierarchical(nested).combinatorial == 20);

    CHECK(builtin_ground_truth("one-factor-pair").graph == one_factor[1].graph);
    CHECK_THROWS_AS((void)builtin_ground_truth("no-such-truth"), std::invalid_argument);
}

TEST_CASE("random hierarchical graphs are canonical, bounded, and deterministic") {
    auto rng = make_rng(777);
    for (int draw = 0; draw < 60; ++draw) {
        const LatentDag g = random_hierarchical_dag(8, 4, rng);
        CAPTURE(draw);
        CHECK(g.m() >= 2);
        CHECK(g.m() <= 8);
        CHECK(g.n() >= 1);
        CHECK(g.n() <= 4);
        CHECK(satisfies_hierarchical(g));
        CHECK(op_min(op_skeleton(g)) == g);
    }

    auto rng_a = make_rng(123), rng_b = make_rng(123);
    for (int draw = 0; draw < 5; ++draw)
        CHECK(random_hierarchical_dag(8, 4, rng_a) == random_hierarchical_dag(8, 4, rng_b));

    CHECK_THROWS_AS((void)random_hierarchical_dag(1, 1, rng), std::invalid_argument);
    CHECK_THROWS_AS((void)random_hierarchical_dag(4, 0, rng), std::invalid_argument);
}

TEST_CASE("random hierarchical graphs keep the combinatorial dimension exact") {
    auto rng = make_rng(9090);
    for (int draw = 0; draw < 25; ++draw) {
        const LatentDag g = random_hierarchical_dag(8, 4, rng);
        auto probe_rng = make_rng(40000 + draw);
        CAPTURE(draw);
        CHECK(dof_numeric(g, 5, probe_rng) == dof_hierarchical(g).combinatorial);
    }
}

TEST_CASE("benchmark runner aggregates deterministic per-trial metrics") {
    BenchmarkConfig cfg;
    cfg.truths = {builtin_ground_truth("one-factor-pair")};
    cfg.sample_sizes = {400};
    cfg.trials = 2;
    cfg.methods = {BenchmarkMethod::Exact, BenchmarkMethod::Continuous};
    cfg.continuous_options.restarts = 2;
    cfg.continuous_options.iterations = 250;
    cfg.workers = 2;
    cfg.seed = 11;

    const auto rows = run_benchmark(cfg);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].method == "exact");
    CHECK(rows[1].method == "continuous");
    for (const auto& row : rows) {
        CAPTURE(row.method);
        CHECK(row.truth_id == "one-factor-pair");
        CHECK(row.sample_size == 400);
        CHECK(row.valid_trials + row.invalid_trials == 2);
        if (row.valid_trials > 0) {
            CHECK(row.f1_mean >= 0.0);
            CHECK(row.f1_mean <= 1.0);
            CHECK(row.shd_mean >= 0.0);
            CHECK(row.runtime_mean > 0.0);
        }
    }

    const auto rows_again = run_benchmark(cfg);
    REQUIRE(rows_again.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CAPTURE(i);
        CHECK(same_metrics(rows[i], rows_again[i]));
    }

    const std::string csv = metric_rows_csv(rows);
    CHECK(csv.rfind("truth,method,sample_size,valid_trials,invalid_trials,f1_mean,", 0) == 0);
    CHECK(csv.find("one-factor-pair,exact,400,2,0,") != std::string::npos);
    const std::string table = metric_rows_table(rows);
    CHECK(table.find("one-factor-pair") != std::string::npos);
    CHECK(table.find("continuous") != std::string::npos);

    BenchmarkConfig bad = cfg;
    bad.trials = 0;
    CHECK_THROWS_AS((void)run_benchmark(bad), std::invalid_argument);
    bad = cfg;
    bad.truths.clear();
    CHECK_THROWS_AS((void)run_benchmark(bad), std::invalid_argument);
}

TEST_CASE("exact search recovers the bundled one-factor truths from large samples") {
    BenchmarkConfig cfg;
    for (const auto& gt : builtin_ground_truths(TruthClass::OneFactor))
        if (gt.graph.m() <= 7) cfg.truths.push_back(gt);
    REQUIRE(cfg.truths.size() == 3);
    cfg.sample_sizes = {10000};
    cfg.trials = 2;
    cfg.methods = {BenchmarkMethod::Exact};
    cfg.workers = 4;
    cfg.seed = 5;

    for (const auto& row : run_benchmark(cfg)) {
        CAPTURE(row.truth_id);
        CHECK(row.valid_trials == 2);
        CHECK(row.f1_mean >= 0.98);
        CHECK(row.shd_mean <= 0.5);
    }
}
