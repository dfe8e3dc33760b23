#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lvcd/latent_dag.hpp"
#include "lvcd/search.hpp"

namespace lvcd {

// Skeleton F1 between the two graphs' edge sets, maximized over injections
// of the smaller latent label set into the larger (latents are unordered;
// unmatched latents contribute their edges as pure errors).  Measured labels
// stay fixed.  Throws std::invalid_argument when the measured counts differ.
double f1_skeleton(const LatentDag& est, const LatentDag& truth);

// Structural Hamming distance between the two graphs' CPDAGs, minimized over
// injections of the smaller latent label set into the larger.  Insertions,
// deletions, and modifications (orientation or edge-type changes) each count
// one.  Throws std::invalid_argument when the measured counts differ.
long shd_mec(const LatentDag& est, const LatentDag& truth);

// ---- ground-truth library ------------------------------------------------------

enum class TruthClass { OneFactor, Hierarchical };

struct GroundTruth {
    std::string id;
    LatentDag graph;
};

// Documented representative benchmark structures; every OneFactor entry
// satisfies the 1-factor assumptions, every Hierarchical entry satisfies the
// hierarchical assumptions and is a fixpoint of the skeleton/minimality
// operators.
std::vector<GroundTruth> builtin_ground_truths(TruthClass cls);

// Lookup across both classes.  Throws std::invalid_argument for unknown ids.
const GroundTruth& builtin_ground_truth(const std::string& id);

// Random hierarchical structure in canonical form: covers of size 1-2 are
// arranged in a tree (multi-latent covers only under parents of at least
// their size), measured children are attached cover-wide, and the draw is
// rejected until the result satisfies the hierarchical assumptions and is a
// fixpoint of the skeleton/minimality operators.  At most m_max measured and
// n_max latent variables.
LatentDag random_hierarchical_dag(int m_max, int n_max, std::mt19937_64& rng);

// ---- benchmark runner ----------------------------------------------------------

enum class BenchmarkMethod { Exact, Continuous };

struct BenchmarkConfig {
    std::vector<GroundTruth> truths;
    std::vector<long> sample_sizes{100, 300, 1000, 3000, 10000};
    int trials = 3;
    std::vector<BenchmarkMethod> methods{BenchmarkMethod::Exact, BenchmarkMethod::Continuous};
    ScoreKind score_kind = ScoreKind::Bic;
    FitOptions fit_options;
    ContinuousOptions continuous_options;
    GenerationTestConfig generation_test;
    long candidate_cap = 1000000;
    int workers = 0;  // <= 0: hardware concurrency; applied across trials
    uint64_t seed = 0;
};

struct MetricRow {
    std::string truth_id;
    std::string method;  // "exact" or "continuous"
    long sample_size = 0;
    int valid_trials = 0;
    int invalid_trials = 0;
    double f1_mean = 0.0;
    double f1_std = 0.0;
    double shd_mean = 0.0;
    double shd_std = 0.0;
    double runtime_mean = 0.0;  // seconds
    double runtime_std = 0.0;

    bool operator==(const MetricRow&) const = default;
};

// For each (truth, sample size, trial): draws parameters and data from a
// stream derived from (seed, truth, sample size, trial), runs every
// configured method on the same data, and aggregates mean/std of both
// metrics per (truth, method, sample size) over the valid trials.  Method
// failures are excluded from the aggregates and reported via invalid_trials.
// Trials run concurrently; results are independent of scheduling.
std::vector<MetricRow> run_benchmark(const BenchmarkConfig& cfg);

// CSV serialization (one row per MetricRow, fixed header).
std::string metric_rows_csv(const std::vector<MetricRow>& rows);

// Formatted text tables, one block per (truth, metric) with sample sizes as
// rows and methods as columns.
std::string metric_rows_table(const std::vector<MetricRow>& rows);

}  // namespace lvcd
