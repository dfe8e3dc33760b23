#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <vector>
#include <limits>
#include <utility>

namespace lvcd {

struct LbfgsOptions {
    int max_iterations = 2000;
    double gradient_tolerance = 1e-6;  // infinity norm of the gradient
    int memory = 10;                   // number of (s, y) correction pairs kept
    double c1 = 1e-4;                  // sufficient-decrease constant
    double c2 = 0.9;                   // curvature constant
    int max_line_search = 60;          // evaluations per line search
};

struct LbfgsResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    bool converged = false;  // gradient tolerance reached
    int iterations = 0;
};

namespace detail {

// Two-loop recursion: returns an approximation of H * g where H is the
// inverse Hessian built from the stored correction pairs.
inline Eigen::VectorXd lbfgs_two_loop(const std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& mem,
                                      const Eigen::VectorXd& grad) {
    Eigen::VectorXd q = grad;
    const int k = static_cast<int>(mem.size());
    std::vector<double> alpha(static_cast<size_t>(k));
    std::vector<double> rho(static_cast<size_t>(k));
    for (int i = k - 1; i >= 0; --i) {
        const auto& [s, y] = mem[static_cast<size_t>(i)];
        rho[static_cast<size_t>(i)] = 1.0 / y.dot(s);
        alpha[static_cast<size_t>(i)] = rho[static_cast<size_t>(i)] * s.dot(q);
        q -= alpha[static_cast<size_t>(i)] * y;
    }
    if (k > 0) {
        const auto& [s, y] = mem.back();
        q *= s.dot(y) / y.dot(y);
    }
    for (int i = 0; i < k; ++i) {
        const auto& [s, y] = mem[static_cast<size_t>(i)];
        const double beta = rho[static_cast<size_t>(i)] * y.dot(q);
        q += (alpha[static_cast<size_t>(i)] - beta) * s;
    }
    return q;
}

}  // namespace detail

// Minimizes a smooth function with L-BFGS and a strong-Wolfe line search
// (bracketing plus interpolation-based zoom).  `objective` is called as
// objective(x, grad) and must return the function value and fill `grad`;
// it may return +infinity outside the implicit domain, in which case the
// line search backtracks.  The returned iterate is the best one evaluated,
// so the result never has a larger value than the starting point.
template <class F>
LbfgsResult lbfgs_minimize(F&& objective, Eigen::VectorXd x0, const LbfgsOptions& opts = {}) {
    const auto dim = x0.size();
    Eigen::VectorXd grad(dim);
    double f = objective(x0, grad);

    LbfgsResult best;
    best.x = x0;
    best.f = f;
    if (!std::isfinite(f)) return best;

    Eigen::VectorXd x = std::move(x0);
    std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> mem;

    Eigen::VectorXd x_trial(dim), grad_trial(dim);
    // phi(a) = objective(x + a * dir); returns the value and phi'(a).
    Eigen::VectorXd dir(dim);
    auto phi = [&](double a, double& dphi) {
        x_trial = x + a * dir;
        const double val = objective(x_trial, grad_trial);
        dphi = std::isfinite(val) ? grad_trial.dot(dir) : std::numeric_limits<double>::quiet_NaN();
        return val;
    };

    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        best.iterations = iter;
        if (grad.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance) {
            best.converged = true;
            return best;
        }

        dir = -detail::lbfgs_two_loop(mem, grad);
        double dphi0 = grad.dot(dir);
        if (!(dphi0 < 0)) {  // not a descent direction: reset to steepest descent
            mem.clear();
            dir = -grad;
            dphi0 = grad.dot(dir);
        }

        // Strong-Wolfe search: bracket then zoom.
        const double f0 = f;
        double a_prev = 0.0, f_prev = f0, dphi_prev = dphi0;
        double a = mem.empty() ? std::min(1.0, 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>())) : 1.0;
        double a_accept = -1.0;
        double lo = 0.0, hi = -1.0, f_lo = f0, dphi_lo = dphi0, f_hi = 0.0;
        bool bracketed = false;
        int evals = 0;
        for (; evals < opts.max_line_search; ++evals) {
            double dphi_a;
            const double fa = phi(a, dphi_a);
            if (!std::isfinite(fa) || fa > f0 + opts.c1 * a * dphi0 || (evals > 0 && fa >= f_prev)) {
                lo = a_prev; f_lo = f_prev; dphi_lo = dphi_prev;
                hi = a; f_hi = fa;
                bracketed = true;
                break;
            }
            if (std::abs(dphi_a) <= -opts.c2 * dphi0) {
                a_accept = a;
                break;
            }
            if (dphi_a >= 0) {
                lo = a; f_lo = fa; dphi_lo = dphi_a;
                hi = a_prev; f_hi = f_prev;
                bracketed = true;
                break;
            }
            a_prev = a; f_prev = fa; dphi_prev = dphi_a;
            a *= 2.0;
        }
        if (bracketed) {
            for (; evals < opts.max_line_search; ++evals) {
                // Quadratic interpolation using (lo, f_lo, dphi_lo) and (hi, f_hi),
                // with a bisection safeguard.
                double aj = 0.5 * (lo + hi);
                if (std::isfinite(f_hi)) {
                    const double denom = 2.0 * (f_hi - f_lo - dphi_lo * (hi - lo));
                    if (std::abs(denom) > 1e-300) {
                        const double cand = lo - dphi_lo * (hi - lo) * (hi - lo) / denom;
                        const double margin = 0.1 * std::abs(hi - lo);
                        if (std::isfinite(cand) && cand > std::min(lo, hi) + margin &&
                            cand < std::max(lo, hi) - margin) {
                            aj = cand;
                        }
                    }
                }
                double dphi_j;
                const double fj = phi(aj, dphi_j);
                if (!std::isfinite(fj) || fj > f0 + opts.c1 * aj * dphi0 || fj >= f_lo) {
                    hi = aj; f_hi = fj;
                } else {
                    if (std::abs(dphi_j) <= -opts.c2 * dphi0) {
                        a_accept = aj;
                        break;
                    }
                    if (dphi_j * (hi - lo) >= 0) {
                        hi = lo; f_hi = f_lo;
                    }
                    lo = aj; f_lo = fj; dphi_lo = dphi_j;
                }
                if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) {
                    if (f_lo < f0) a_accept = lo;
                    break;
                }
            }
            if (a_accept < 0 && f_lo < f0 && lo > 0) {
                // Zoom ran out of budget: accept the best sufficient-decrease point.
                a_accept = lo;
            }
        }
        if (a_accept <= 0) {
            if (mem.empty()) return best;  // steepest descent failed: give up
            mem.clear();                   // retry from a fresh Hessian
            continue;
        }

        // Re-evaluate at the accepted point (x_trial/grad_trial may hold a
        // different trial when zoom exited via the safeguard).
        x_trial = x + a_accept * dir;
        f = objective(x_trial, grad_trial);
        if (!std::isfinite(f)) return best;
        Eigen::VectorXd s = x_trial - x;
        Eigen::VectorXd y = grad_trial - grad;
        x = std::move(x_trial);
        x_trial.resize(dim);
        grad.swap(grad_trial);
        if (f < best.f) {
            best.f = f;
            best.x = x;
        }
        if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
            mem.emplace_back(std::move(s), std::move(y));
            if (static_cast<int>(mem.size()) > opts.memory) mem.pop_front();
        }
    }
    best.iterations = opts.max_iterations;
    best.converged = grad.lpNorm<Eigen::Infinity>() <= opts.gradient_tolerance;
    return best;
}

}  // namespace lvcd
