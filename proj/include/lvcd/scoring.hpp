#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>

#include "lvcd/latent_dag.hpp"
#include "lvcd/sem.hpp"

namespace lvcd {

// Sample covariance plus sample count; the unit every score consumes.
class Dataset {
  public:
    // Rows are observations.  Columns are centered and s = (1/t) X^T X.
    static Dataset from_raw(const Eigen::MatrixXd& x);
    // Covariance given directly (must be square, symmetric, finite).
    static Dataset from_covariance(const Eigen::MatrixXd& s, long t);

    const Eigen::MatrixXd& s() const { return s_; }
    long t() const { return t_; }
    int m() const { return static_cast<int>(s_.rows()); }

  private:
    Dataset() = default;
    Eigen::MatrixXd s_;
    long t_ = 0;
};

enum class ScoreKind { Bic, Dim };

struct Score {
    ScoreKind kind = ScoreKind::Bic;
    double value = 0.0;  // +infinity for Dim when the model cannot generate s
    long dof = 0;
    std::optional<double> nll;
};

struct FitOptions {
    int restarts = 5;
    int max_iterations = 2000;
    double gradient_tolerance = 1e-6;
    uint64_t seed = 0;
};

struct FitResult {
    SemParameters params;  // omega_l fixed to all-ones
    double nll = 0.0;
    bool converged = false;
    int restarts_used = 0;
};

struct GenerationTestConfig {
    // Likelihood-ratio test level; the acceptance threshold is the upper
    // chi-squared quantile at this level with m(m+1)/2 - dof degrees of
    // freedom, unless `threshold` overrides it.
    double level = 1e-3;
    std::optional<double> threshold;
};

// (t/2) [tr(S Sigma^-1) + log det Sigma] with Sigma the implied covariance
// of p.  Requires omega_l == 1; returns +infinity when Sigma is not
// positive definite.
double nll(const SemParameters& p, const Dataset& d);

// (t/2) (m + log det S), the negative log-likelihood of the saturated model.
// Throws std::runtime_error when s is not positive definite.
double saturated_nll(const Dataset& d);

// Gradient of nll with respect to every entry of b and c and to
// log(omega_x) (entries outside the support of a graph are simply unused
// by the fitter).  Requires omega_l == 1.
struct NllGradient {
    Eigen::MatrixXd b;            // m x n
    Eigen::MatrixXd c;            // n x n
    Eigen::VectorXd log_omega_x;  // m
};
NllGradient nll_gradient(const SemParameters& p, const Dataset& d);

// Free-parameter vector layout: weights of g.measurement_edges() in order,
// then weights of g.latent_edges() in order, then log(omega_x).
Eigen::VectorXd pack_parameters(const SemParameters& p, const LatentDag& g);
SemParameters unpack_parameters(const Eigen::VectorXd& v, const LatentDag& g);
// nll_gradient masked and packed in the same layout.
Eigen::VectorXd packed_nll_gradient(const SemParameters& p, const LatentDag& g, const Dataset& d);

// Maximum-likelihood fit of g to d: quasi-Newton minimization of nll over
// the free parameters from `opts.restarts` random starts (weights ~ N(0,1),
// log omega_x = log diag S), keeping the best optimum.  Throws
// std::runtime_error if every restart fails to produce a finite value.
FitResult fit_ml(const LatentDag& g, const Dataset& d, const FitOptions& opts = {});

// fit.nll + (log t / 2) * dof.
Score bic(const LatentDag& g, const Dataset& d, long dof, const FitResult& fit);

// dof when 2 (fit.nll - saturated_nll) passes the generation test, else
// +infinity.  Throws when s is not positive definite.
Score score_dim(const LatentDag& g, const Dataset& d, long dof, const FitResult& fit,
                const GenerationTestConfig& tol = {});

}  // namespace lvcd
