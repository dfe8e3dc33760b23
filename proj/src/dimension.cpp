#include "lvcd/dimension.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <stdexcept>
#include <utility>

#include "lvcd/covers.hpp"

namespace lvcd {

long dof_one_factor(const LatentDag& g) {
    if (!satisfies_one_factor(g))
        throw std::invalid_argument("dof_one_factor: graph is not a one-factor model");
    return g.edge_count() + g.m();
}

DofReport dof_hierarchical(const LatentDag& g) {
    if (!satisfies_hierarchical(g))
        throw std::invalid_argument("dof_hierarchical: graph violates the hierarchical assumption");
    const NodeGraph ng(g);
    // Maximal groups sharing (parent set, child set) are the equivalence
    // classes of that pair.
    std::map<std::pair<uint64_t, uint64_t>, std::vector<int>> groups;
    for (int j = 0; j < g.n(); ++j)
        groups[{ng.parents[static_cast<size_t>(j)], ng.children[static_cast<size_t>(j)]}]
            .push_back(j);

    DofReport report;
    report.combinatorial = g.edge_count() + g.m();
    for (auto& [key, members] : groups) {
        const long k = static_cast<long>(members.size());
        if (k < 2) continue;
        DofReduction red;
        red.latents = std::move(members);
        red.deduction = k * (k - 1) / 2;
        report.combinatorial -= red.deduction;
        report.reductions.push_back(std::move(red));
    }
    std::sort(report.reductions.begin(), report.reductions.end(),
              [](const DofReduction& a, const DofReduction& b) {
                  return a.latents.front() < b.latents.front();
              });
    // The saturated covariance dimension caps the count: the reduction
    // formula alone can exceed it on small graphs.
    const long m = g.m();
    report.combinatorial = std::min(report.combinatorial, m * (m + 1) / 2);
    return report;
}

long dof_upper_bound(const LatentDag& g) {
    const long m = g.m();
    return std::min<long>(g.edge_count() + m, m * (m + 1) / 2);
}

Eigen::MatrixXd covariance_jacobian(const LatentDag& g, const SemParameters& p) {
    validate(p, g);
    if (p.omega_l.size() > 0 && (p.omega_l.array() - 1.0).abs().maxCoeff() > 1e-12)
        throw std::invalid_argument("covariance_jacobian: omega_l must be all-ones");
    const int m = g.m();
    const int n = g.n();
    Eigen::MatrixXd i_minus_c = Eigen::MatrixXd::Identity(n, n) - p.c;
    const Eigen::MatrixXd a =
        i_minus_c.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
    const Eigen::MatrixXd ba = p.b * a;            // m x n
    const Eigen::MatrixXd bm = ba * a.transpose();  // B (I-C)^-1 (I-C)^-T, m x n

    const auto meas = g.measurement_edges();
    const auto lat = g.latent_edges();
    const Eigen::Index rows = static_cast<Eigen::Index>(m) * (m + 1) / 2;
    Eigen::MatrixXd jac(rows, static_cast<Eigen::Index>(meas.size() + lat.size()) + m);

    Eigen::MatrixXd d_sigma(m, m);
    Eigen::Index col = 0;
    auto vech_into = [&](Eigen::Index c) {
        Eigen::Index k = 0;
        for (int s = 0; s < m; ++s)
            for (int r = s; r < m; ++r) jac(k++, c) = d_sigma(r, s);
    };
    // d Sigma / d b(i, j) = e_i u^T + u e_i^T with u = (B M)_{:, j}.
    for (const auto& [j, i] : meas) {
        d_sigma.setZero();
        d_sigma.row(i) += bm.col(j).transpose();
        d_sigma.col(i) += bm.col(j);
        vech_into(col++);
    }
    // d Sigma / d c(r, q) = u v^T + v u^T with u = (BA)_{:, r}, v = (BM)_{:, q}.
    for (const auto& [q, r] : lat) {
        d_sigma.noalias() = ba.col(r) * bm.col(q).transpose();
        d_sigma += d_sigma.transpose().eval();
        vech_into(col++);
    }
    // d Sigma / d omega_i = e_i e_i^T.
    for (int i = 0; i < m; ++i) {
        d_sigma.setZero();
        d_sigma(i, i) = 1.0;
        vech_into(col++);
    }
    return jac;
}

long dof_numeric(const LatentDag& g, int trials, std::mt19937_64& rng) {
    if (trials < 1) throw std::invalid_argument("dof_numeric: need at least one trial");
    const long rows = static_cast<long>(g.m()) * (g.m() + 1) / 2;
    long best = 0;
    for (int trial = 0; trial < trials; ++trial) {
        SemParameters p = random_parameters(g, rng);
        p.omega_l.setOnes();
        const Eigen::MatrixXd jac = covariance_jacobian(g, p);
        if (jac.rows() == 0 || jac.cols() == 0) return 0;
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
        const auto& sv = svd.singularValues();
        const double threshold = static_cast<double>(std::max<long>(rows, jac.cols())) *
                                 std::numeric_limits<double>::epsilon() * sv[0];
        best = std::max(best, static_cast<long>((sv.array() > threshold).count()));
    }
    return best;
}

}  // namespace lvcd
