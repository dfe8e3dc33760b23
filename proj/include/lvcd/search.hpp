#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lvcd/enumeration.hpp"
#include "lvcd/latent_dag.hpp"
#include "lvcd/scoring.hpp"

namespace lvcd {

enum class SearchMode { OneFactorExact, HierarchicalExact, OneFactorContinuous };

struct ContinuousOptions {
    std::optional<double> lambda;  // sparsity weight; default log(t) / (2 t)
    int restarts = 10;
    int iterations = 3000;  // inner first-order steps per outer round
    double temperature_start = 1.0;
    double temperature_end = 0.1;
    double learning_rate = 1e-2;
    double penalty_initial = 1.0;
    double penalty_growth = 10.0;
    double residual_shrink = 4.0;  // shrink factor demanded per outer round
    int max_outer_rounds = 10;
    double residual_tolerance = 1e-3;
};

struct SearchConfig {
    SearchMode mode = SearchMode::OneFactorExact;
    ScoreKind score_kind = ScoreKind::Bic;
    EnumerationConfig enumeration;
    FitOptions fit_options;
    ContinuousOptions continuous_options;
    GenerationTestConfig generation_test;  // consulted when score_kind == Dim
    int workers = 0;                       // <= 0: hardware concurrency
    double tie_tolerance = 1e-9;           // relative tolerance for score ties
    uint64_t seed = 0;
};

struct ScoredStructure {
    LatentDag graph;
    long graph_id = -1;
    long dof = 0;
    double nll = std::numeric_limits<double>::quiet_NaN();
    double score = std::numeric_limits<double>::infinity();
};

struct CandidateRow {
    long graph_id = -1;
    long dof = 0;
    // nll is NaN when the candidate was skipped without fitting; `score` then
    // holds its proven lower bound instead of an attained value.
    double nll = std::numeric_limits<double>::quiet_NaN();
    double score = 0.0;
    bool pruned = false;
    double seconds = 0.0;
};

struct ContinuousRestartInfo {
    int restart = 0;
    bool repaired = false;
    std::string failure;  // empty when repaired
    double residual = std::numeric_limits<double>::quiet_NaN();
    int outer_rounds = 0;
};

struct SearchReport {
    ScoredStructure best;
    std::vector<CandidateRow> candidates;
    std::vector<ScoredStructure> ties;  // within tolerance of best; best excluded
    double wall_time_seconds = 0.0;
    std::vector<ContinuousRestartInfo> restarts;  // continuous mode only
};

// Scores every enumerated candidate (dof from the mode's dimension rule, nll
// from maximum-likelihood fitting) and returns the minimizer.  Candidates are
// processed in waves of increasing dof; once no remaining wave can beat the
// best completed score (fitted nll can never drop below the saturated nll)
// the rest are reported as pruned rows carrying their lower bound.
// Deterministic for a fixed config; throws on an empty candidate set.
SearchReport exact_search(const Dataset& d, const SearchConfig& cfg);

// ---- continuous relaxation of the 1-factor search ----

struct MaskState {
    Eigen::MatrixXd logits_b;     // m x nbar; row-wise categorical logits for M_B
    Eigen::MatrixXd logits_c;     // nbar x nbar; Bernoulli logits, strict upper used
    Eigen::MatrixXd weight_b;     // m x nbar
    Eigen::MatrixXd weight_c;     // nbar x nbar, strict upper used
    Eigen::VectorXd log_omega_x;  // m
    Eigen::VectorXd slack;        // nbar, kept >= 0 by projection
    Eigen::VectorXd multipliers;  // nbar
};

struct MaskSample {
    Eigen::MatrixXd mb;  // m x nbar, rows sum to one exactly
    Eigen::MatrixXd mc;  // nbar x nbar, strict-upper entries in (0, 1)
};

// Noise inputs frozen for reproducibility and gradient checks: softmax rows
// consume standard Gumbel draws, sigmoid entries consume logistic draws
// (a difference of two Gumbels).
struct MaskNoise {
    Eigen::MatrixXd gumbel_b;    // m x nbar
    Eigen::MatrixXd logistic_c;  // nbar x nbar, strict upper used
};

MaskNoise sample_mask_noise(int m, int nbar, std::mt19937_64& rng);
MaskSample masks_from_noise(const MaskState& state, const MaskNoise& noise, double temperature);
MaskSample sample_masks(const MaskState& state, double temperature, std::mt19937_64& rng);

// (1/t) nll(M_B .* B, M_C .* C, Omega_X) + lambda (sum M_B + sum M_C), with
// lambda defaulting to log(t) / (2 t).
double continuous_objective(const MaskState& state, const MaskSample& masks, const Dataset& d,
                            std::optional<double> lambda = std::nullopt);

// Augmented-Lagrangian value at fixed noise, differentiated with respect to
// every optimized field of `state` (results written into `grad`, whose
// multiplier field is left zero).  rho == 0 with zero multipliers reduces to
// the plain objective.  When `residual_out` is given it receives the
// per-latent constraint residuals g_j - slack_j.
double continuous_objective_with_gradient(const MaskState& state, const MaskNoise& noise,
                                          double temperature, const Dataset& d, double lambda,
                                          double rho, MaskState* grad,
                                          Eigen::VectorXd* residual_out = nullptr);

// Augmented-Lagrangian optimization of the relaxed objective from
// `restarts` random initializations, followed by thresholding, repair to a
// valid 1-factor structure, and exact-BIC rescoring of every repaired
// output.  Throws when every restart fails repair.
SearchReport continuous_search(const Dataset& d, const SearchConfig& cfg);

}  // namespace lvcd
