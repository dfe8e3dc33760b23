#include "lvcd/scoring.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lvcd/lbfgs.hpp"
#include "lvcd/rng.hpp"

namespace lvcd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_covariance_shape(const Eigen::MatrixXd& s) {
    if (s.rows() != s.cols()) throw std::invalid_argument("Dataset: covariance must be square");
    if (s.rows() < 1) throw std::invalid_argument("Dataset: need at least one variable");
    if (!s.allFinite()) throw std::invalid_argument("Dataset: covariance has non-finite entries");
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("Dataset: covariance must be symmetric");
}

void check_omega_l_is_one(const SemParameters& p) {
    if (p.omega_l.size() > 0 && (p.omega_l.array() - 1.0).abs().maxCoeff() > 1e-12)
        throw std::invalid_argument("nll: omega_l must be all-ones (normalize first)");
}

Eigen::MatrixXd mixing(const Eigen::MatrixXd& c) {
    const auto n = c.rows();
    Eigen::MatrixXd i_minus_c = Eigen::MatrixXd::Identity(n, n) - c;
    return i_minus_c.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
}

// Core evaluation shared by nll and nll_gradient; returns false when the
// implied covariance is not positive definite.
struct NllEval {
    double value = kInf;
    Eigen::MatrixXd a;          // (I - C)^-1
    Eigen::MatrixXd sigma_inv;  // Sigma^-1
    bool ok = false;
};

NllEval evaluate_nll(const SemParameters& p, const Dataset& d) {
    NllEval out;
    out.a = mixing(p.c);
    const Eigen::MatrixXd ba = p.b * out.a;
    Eigen::MatrixXd sigma = ba * ba.transpose();
    sigma.diagonal() += p.omega_x;
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) return out;
    const Eigen::MatrixXd& l = llt.matrixLLT();
    double log_det = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
    out.sigma_inv = llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
    const double trace = (d.s().array() * out.sigma_inv.array()).sum();
    const double value = 0.5 * static_cast<double>(d.t()) * (trace + log_det);
    if (!std::isfinite(value)) return out;
    out.value = value;
    out.ok = true;
    return out;
}

void check_dims(const SemParameters& p, const Dataset& d) {
    if (p.b.rows() != d.m() || p.omega_x.size() != d.m())
        throw std::invalid_argument("nll: parameter shape does not match dataset");
    if (p.b.cols() != p.c.rows() || p.c.rows() != p.c.cols() || p.omega_l.size() != p.c.rows())
        throw std::invalid_argument("nll: inconsistent parameter shapes");
}

}  // namespace

Dataset Dataset::from_raw(const Eigen::MatrixXd& x) {
    if (x.rows() < 1 || x.cols() < 1)
        throw std::invalid_argument("Dataset: raw data must be non-empty");
    if (!x.allFinite()) throw std::invalid_argument("Dataset: raw data has non-finite entries");
    Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Dataset d;
    d.s_ = (centered.transpose() * centered) / static_cast<double>(x.rows());
    d.s_ = ((d.s_ + d.s_.transpose()) / 2.0).eval();
    d.t_ = x.rows();
    return d;
}

Dataset Dataset::from_covariance(const Eigen::MatrixXd& s, long t) {
    check_covariance_shape(s);
    if (t < 1) throw std::invalid_argument("Dataset: need t >= 1");
    Dataset d;
    d.s_ = ((s + s.transpose()) / 2.0).eval();
    d.t_ = t;
    return d;
}

double nll(const SemParameters& p, const Dataset& d) {
    check_dims(p, d);
    check_omega_l_is_one(p);
    return evaluate_nll(p, d).value;
}

double saturated_nll(const Dataset& d) {
    Eigen::LLT<Eigen::MatrixXd> llt(d.s());
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("saturated_nll: sample covariance is not positive definite");
    double log_det = 0.0;
    const Eigen::MatrixXd& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
    return 0.5 * static_cast<double>(d.t()) * (static_cast<double>(d.m()) + log_det);
}

NllGradient nll_gradient(const SemParameters& p, const Dataset& d) {
    check_dims(p, d);
    check_omega_l_is_one(p);
    const NllEval e = evaluate_nll(p, d);
    if (!e.ok) throw std::runtime_error("nll_gradient: implied covariance is not positive definite");
    // W = (t/2) (Sigma^-1 - Sigma^-1 S Sigma^-1) is d nll / d Sigma for the
    // symmetric perturbation; the chain rule through Sigma = B M B^T + Omega_X
    // with M = A A^T and A = (I-C)^-1 gives the expressions below.
    const double half_t = 0.5 * static_cast<double>(d.t());
    const Eigen::MatrixXd w = half_t * (e.sigma_inv - e.sigma_inv * d.s() * e.sigma_inv);
    const Eigen::MatrixXd big_m = e.a * e.a.transpose();
    NllGradient g;
    g.b = 2.0 * w * p.b * big_m;
    g.c = 2.0 * e.a.transpose() * p.b.transpose() * w * p.b * big_m;
    g.log_omega_x = w.diagonal().cwiseProduct(p.omega_x);
    return g;
}

Eigen::VectorXd pack_parameters(const SemParameters& p, const LatentDag& g) {
    validate(p, g);
    const auto meas = g.measurement_edges();
    const auto lat = g.latent_edges();
    Eigen::VectorXd v(static_cast<Eigen::Index>(meas.size() + lat.size()) + g.m());
    Eigen::Index k = 0;
    for (const auto& [j, i] : meas) v[k++] = p.b(i, j);
    for (const auto& [parent, child] : lat) v[k++] = p.c(child, parent);
    for (int i = 0; i < g.m(); ++i) v[k++] = std::log(p.omega_x[i]);
    return v;
}

SemParameters unpack_parameters(const Eigen::VectorXd& v, const LatentDag& g) {
    const auto meas = g.measurement_edges();
    const auto lat = g.latent_edges();
    if (v.size() != static_cast<Eigen::Index>(meas.size() + lat.size()) + g.m())
        throw std::invalid_argument("unpack_parameters: wrong vector length");
    SemParameters p;
    p.b = Eigen::MatrixXd::Zero(g.m(), g.n());
    p.c = Eigen::MatrixXd::Zero(g.n(), g.n());
    p.omega_x = Eigen::VectorXd::Zero(g.m());
    p.omega_l = Eigen::VectorXd::Ones(g.n());
    Eigen::Index k = 0;
    for (const auto& [j, i] : meas) p.b(i, j) = v[k++];
    for (const auto& [parent, child] : lat) p.c(child, parent) = v[k++];
    for (int i = 0; i < g.m(); ++i) p.omega_x[i] = std::exp(v[k++]);
    return p;
}

Eigen::VectorXd packed_nll_gradient(const SemParameters& p, const LatentDag& g, const Dataset& d) {
    validate(p, g);
    const NllGradient full = nll_gradient(p, d);
    const auto meas = g.measurement_edges();
    const auto lat = g.latent_edges();
    Eigen::VectorXd v(static_cast<Eigen::Index>(meas.size() + lat.size()) + g.m());
    Eigen::Index k = 0;
    for (const auto& [j, i] : meas) v[k++] = full.b(i, j);
    for (const auto& [parent, child] : lat) v[k++] = full.c(child, parent);
    for (int i = 0; i < g.m(); ++i) v[k++] = full.log_omega_x[i];
    return v;
}

FitResult fit_ml(const LatentDag& g, const Dataset& d, const FitOptions& opts) {
    if (g.m() != d.m()) throw std::invalid_argument("fit_ml: graph and dataset disagree on m");
    if (opts.restarts < 1) throw std::invalid_argument("fit_ml: need at least one restart");
    const auto meas = g.measurement_edges();
    const auto lat = g.latent_edges();
    const Eigen::Index num_weights = static_cast<Eigen::Index>(meas.size() + lat.size());
    const Eigen::Index dim = num_weights + g.m();

    auto objective = [&](const Eigen::VectorXd& v, Eigen::VectorXd& grad) -> double {
        const SemParameters p = unpack_parameters(v, g);
        const NllEval e = evaluate_nll(p, d);
        if (!e.ok) {
            grad.setZero();
            return kInf;
        }
        const double half_t = 0.5 * static_cast<double>(d.t());
        const Eigen::MatrixXd w = half_t * (e.sigma_inv - e.sigma_inv * d.s() * e.sigma_inv);
        const Eigen::MatrixXd big_m = e.a * e.a.transpose();
        const Eigen::MatrixXd gb = 2.0 * w * p.b * big_m;
        const Eigen::MatrixXd gc =
            2.0 * e.a.transpose() * p.b.transpose() * w * p.b * big_m;
        Eigen::Index k = 0;
        for (const auto& [j, i] : meas) grad[k++] = gb(i, j);
        for (const auto& [parent, child] : lat) grad[k++] = gc(child, parent);
        for (int i = 0; i < g.m(); ++i) grad[k++] = w(i, i) * p.omega_x[i];
        return e.value;
    };

    Eigen::VectorXd log_diag(g.m());
    for (int i = 0; i < g.m(); ++i) log_diag[i] = std::log(std::max(d.s()(i, i), 1e-300));

    LbfgsOptions lopts;
    lopts.max_iterations = opts.max_iterations;
    lopts.gradient_tolerance = opts.gradient_tolerance;

    FitResult best;
    best.nll = kInf;
    best.restarts_used = opts.restarts;
    for (int r = 0; r < opts.restarts; ++r) {
        std::mt19937_64 rng = make_rng(opts.seed, static_cast<uint64_t>(r));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::VectorXd x0(dim);
        for (Eigen::Index k = 0; k < num_weights; ++k) x0[k] = gauss(rng);
        x0.tail(g.m()) = log_diag;
        const LbfgsResult res = lbfgs_minimize(objective, std::move(x0), lopts);
        if (std::isfinite(res.f) && res.f < best.nll) {
            best.nll = res.f;
            best.params = unpack_parameters(res.x, g);
            best.converged = res.converged;
        }
    }
    if (!std::isfinite(best.nll)) {
        std::ostringstream msg;
        msg << "fit_ml: no restart reached a finite objective (m=" << g.m() << ", n=" << g.n()
            << ", edges=" << g.edge_count() << ", t=" << d.t() << ", restarts=" << opts.restarts
            << ")";
        throw std::runtime_error(msg.str());
    }
    return best;
}

Score bic(const LatentDag& g, const Dataset& d, long dof, const FitResult& fit) {
    if (g.m() != d.m()) throw std::invalid_argument("bic: graph and dataset disagree on m");
    Score s;
    s.kind = ScoreKind::Bic;
    s.dof = dof;
    s.nll = fit.nll;
    s.value = fit.nll + 0.5 * std::log(static_cast<double>(d.t())) * static_cast<double>(dof);
    return s;
}

Score score_dim(const LatentDag& g, const Dataset& d, long dof, const FitResult& fit,
                const GenerationTestConfig& tol) {
    if (g.m() != d.m()) throw std::invalid_argument("score_dim: graph and dataset disagree on m");
    const double saturated = saturated_nll(d);
    double threshold;
    if (tol.threshold.has_value()) {
        threshold = *tol.threshold;
    } else {
        const long df = static_cast<long>(d.m()) * (d.m() + 1) / 2 - dof;
        if (df >= 1) {
            boost::math::chi_squared chi(static_cast<double>(df));
            threshold = boost::math::quantile(chi, 1.0 - tol.level);
        } else {
            threshold = 0.0;  // saturated model: only an exact fit passes
        }
    }
    const double statistic = 2.0 * (fit.nll - saturated);
    Score s;
    s.kind = ScoreKind::Dim;
    s.dof = dof;
    s.nll = fit.nll;
    s.value = statistic <= threshold ? static_cast<double>(dof) : kInf;
    return s;
}

}  // namespace lvcd
