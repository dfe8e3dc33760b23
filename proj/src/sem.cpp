#include "lvcd/sem.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace lvcd {

void validate(const CovMatrix& s) {
    const auto& sig = s.sigma;
    if (sig.rows() != sig.cols()) throw std::invalid_argument("covariance: not square");
    if ((sig - sig.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("covariance: not symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(sig);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("covariance: not positive definite");
}

void validate(const SemParameters& p, const LatentDag& g) {
    const int m = g.m(), n = g.n();
    if (p.b.rows() != m || p.b.cols() != n || p.c.rows() != n || p.c.cols() != n ||
        p.omega_x.size() != m || p.omega_l.size() != n)
        throw std::invalid_argument("sem parameters: shape mismatch");
    if ((p.omega_x.array() <= 0).any() || (p.omega_l.array() <= 0).any())
        throw std::invalid_argument("sem parameters: variances must be positive");
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            if (p.b(i, j) != 0 && !g.measurement_edge(j, i))
                throw std::invalid_argument("sem parameters: b support outside graph");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (p.c(i, j) != 0 && !g.latent_edge(j, i))
                throw std::invalid_argument("sem parameters: c support outside graph");
}

// (I - C)^{-1}; C strictly upper triangular, so I - C is unit upper
// triangular and the inverse is exact up to triangular solves.
static Eigen::MatrixXd mixing(const Eigen::MatrixXd& c) {
    const int n = static_cast<int>(c.rows());
    Eigen::MatrixXd ic = Eigen::MatrixXd::Identity(n, n) - c;
    return ic.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(n, n));
}

CovMatrix implied_covariance(const SemParameters& p) {
    Eigen::MatrixXd a = mixing(p.c);
    Eigen::MatrixXd ba = p.b * a;
    Eigen::MatrixXd sigma = ba * p.omega_l.asDiagonal() * ba.transpose();
    sigma += Eigen::MatrixXd(p.omega_x.asDiagonal());
    sigma = ((sigma + sigma.transpose()) / 2).eval();
    return CovMatrix{std::move(sigma)};
}

SemParameters normalize_omega_l(const SemParameters& p) {
    const int n = static_cast<int>(p.omega_l.size());
    Eigen::VectorXd root = p.omega_l.cwiseSqrt();
    SemParameters out = p;
    out.b = p.b * root.asDiagonal();
    out.c = root.cwiseInverse().asDiagonal() * p.c * root.asDiagonal();
    out.omega_l = Eigen::VectorXd::Ones(n);
    return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> orthogonal_transform(const SemParameters& p,
                                                                 const Eigen::MatrixXd& q) {
    const int n = static_cast<int>(p.c.rows());
    if (q.rows() != n || q.cols() != n) throw std::invalid_argument("orthogonal_transform: bad shape");
    if ((q * q.transpose() - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("orthogonal_transform: q not orthogonal");
    if (n > 0 && (p.omega_l - Eigen::VectorXd::Ones(n)).cwiseAbs().maxCoeff() > 1e-10)
        throw std::invalid_argument("orthogonal_transform: omega_l must be the unit vector");
    return {p.b * q, q.transpose() * p.c * q};
}

std::pair<LatentDag, SemParameters> reduce_shared_cover(const LatentDag& g, const SemParameters& p,
                                                        const std::set<NodeId>& cover) {
    validate(p, g);
    const int n = g.n();
    std::vector<int> s;
    for (const NodeId& v : cover) {
        if (v.kind != NodeKind::Latent || v.index < 0 || v.index >= n)
            throw std::invalid_argument("reduce_shared_cover: cover must be a set of latents");
        s.push_back(v.index);
    }
    std::sort(s.begin(), s.end());
    const int k = static_cast<int>(s.size());
    if (k < 2) throw std::invalid_argument("reduce_shared_cover: need k >= 2 latents");

    NodeGraph ng(g);
    const uint64_t s_mask = [&] {
        uint64_t x = 0;
        for (int j : s) x |= uint64_t{1} << j;
        return x;
    }();
    const uint64_t parents = ng.parents[s[0]];
    const uint64_t children = ng.children[s[0]];
    for (int j : s)
        if (ng.parents[j] != parents || ng.children[j] != children)
            throw std::invalid_argument("reduce_shared_cover: cover members must share parents and children");
    if (children & s_mask)  // would contradict equal parent sets anyway
        throw std::invalid_argument("reduce_shared_cover: cover must have no internal edges");

    std::vector<int> meas_children, lat_children, lat_parents;
    for_each_bit(children, [&](int f) {
        NodeId v = g.unflat(f);
        if (v.kind == NodeKind::Measured)
            meas_children.push_back(v.index);
        else
            lat_children.push_back(v.index);
    });
    for_each_bit(parents, [&](int f) { lat_parents.push_back(f); });
    const int r1 = static_cast<int>(meas_children.size());
    const int r2 = static_cast<int>(lat_children.size());

    const bool via_children = r1 + r2 >= k;
    if (!via_children && static_cast<int>(lat_parents.size()) < k)
        throw std::invalid_argument("reduce_shared_cover: need at least k shared children or k parents");

    // Build the k x k rotation W so that the triangularized block has
    // k(k-1)/2 zeros with a nonnegative diagonal, and record the removed
    // (parent latent, child) edges.
    Eigen::MatrixXd w;
    std::vector<std::pair<int, NodeId>> removed;  // (latent parent, child node)
    if (via_children) {
        // D rows: weights into each shared child; D = D~ W^-1 with D~ lower
        // triangular, i.e. QR of D^T.
        Eigen::MatrixXd d(r1 + r2, k);
        for (int i = 0; i < r1; ++i)
            for (int j = 0; j < k; ++j) d(i, j) = p.b(meas_children[i], s[j]);
        for (int i = 0; i < r2; ++i)
            for (int j = 0; j < k; ++j) d(r1 + i, j) = p.c(lat_children[i], s[j]);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(d.transpose());
        Eigen::MatrixXd qfull = qr.householderQ();
        Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < k; ++i)
            if (r(i, i) < 0) qfull.col(i) = -qfull.col(i);
        w = qfull;  // D * W is lower triangular with nonnegative diagonal
        for (int i = 0; i + 1 < k; ++i) {
            NodeId child = i < r1 ? measured_node(meas_children[i]) : latent_node(lat_children[i - r1]);
            for (int j = i + 1; j < k; ++j) removed.emplace_back(s[j], child);
        }
    } else {
        // Rows S of C against parent columns: W^T C(S, P) upper triangular,
        // i.e. QR of C(S, P).
        const int np = static_cast<int>(lat_parents.size());
        Eigen::MatrixXd d(k, np);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < np; ++j) d(i, j) = p.c(s[i], lat_parents[j]);
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(d);
        Eigen::MatrixXd qfull = qr.householderQ();
        Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        for (int i = 0; i < k; ++i)
            if (r(i, i) < 0) qfull.col(i) = -qfull.col(i);
        w = qfull;  // W^T C(S, P) upper triangular with nonnegative diagonal
        for (int j = 0; j + 1 < k; ++j)
            for (int i = j + 1; i < k; ++i) removed.emplace_back(lat_parents[j], latent_node(s[i]));
    }

    Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n);
    for (int a = 0; a < k; ++a)
        for (int b = 0; b < k; ++b) u(s[a], s[b]) = w(a, b);

    SemParameters out = p;
    out.b = p.b * u;
    out.c = u.transpose() * p.c * u;

    LatentDag gg = g;
    for (auto [parent, child] : removed) {
        if (child.kind == NodeKind::Measured) {
            gg.set_measurement_edge(parent, child.index, false);
            out.b(child.index, parent) = 0.0;
        } else {
            gg.set_latent_edge(parent, child.index, false);
            out.c(child.index, parent) = 0.0;
        }
    }
    // The rotation leaves every entry outside the transformed rows/columns
    // untouched; clear rounding dust on entries that are structurally zero.
    for (int i = 0; i < g.m(); ++i)
        for (int j = 0; j < n; ++j)
            if (!gg.measurement_edge(j, i)) out.b(i, j) = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!gg.latent_edge(j, i)) out.c(i, j) = 0.0;
    validate(out, gg);
    return {std::move(gg), std::move(out)};
}

SemParameters random_parameters(const LatentDag& g, std::mt19937_64& rng) {
    const int m = g.m(), n = g.n();
    std::uniform_real_distribution<double> mag(0.5, 2.0), var(2.0, 5.0);
    std::bernoulli_distribution flip(0.5);
    auto weight = [&] {
        double w = mag(rng);
        return flip(rng) ? -w : w;
    };
    SemParameters p;
    p.b = Eigen::MatrixXd::Zero(m, n);
    p.c = Eigen::MatrixXd::Zero(n, n);
    p.omega_x = Eigen::VectorXd(m);
    p.omega_l = Eigen::VectorXd(n);
    for (auto [parent, child] : g.latent_edges()) p.c(child, parent) = weight();
    for (auto [latent, meas] : g.measurement_edges()) p.b(meas, latent) = weight();
    for (int i = 0; i < m; ++i) p.omega_x(i) = var(rng);
    for (int j = 0; j < n; ++j) p.omega_l(j) = var(rng);
    return p;
}

Eigen::MatrixXd sample_data(const SemParameters& p, int t, std::mt19937_64& rng) {
    if (t < 1) throw std::invalid_argument("sample_data: need t >= 1");
    const int m = static_cast<int>(p.b.rows()), n = static_cast<int>(p.b.cols());
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXd el(t, n), ex(t, m);
    for (int r = 0; r < t; ++r)
        for (int j = 0; j < n; ++j) el(r, j) = gauss(rng) * std::sqrt(p.omega_l(j));
    for (int r = 0; r < t; ++r)
        for (int i = 0; i < m; ++i) ex(r, i) = gauss(rng) * std::sqrt(p.omega_x(i));
    Eigen::MatrixXd ba = p.b * mixing(p.c);  // X^T = BA E_L^T + E_X^T
    return el * ba.transpose() + ex;
}

// ---- JSON ---------------------------------------------------------------

static nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    auto rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

static Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, int rows, int cols) {
    if (!j.is_array() || static_cast<int>(j.size()) != rows)
        throw std::invalid_argument("parameter JSON: bad matrix shape");
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
            throw std::invalid_argument("parameter JSON: bad matrix shape");
        for (int c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
    }
    return m;
}

std::string sem_parameters_to_json(const SemParameters& p) {
    nlohmann::json j;
    j["m"] = static_cast<int>(p.b.rows());
    j["n"] = static_cast<int>(p.b.cols());
    j["b"] = matrix_to_json(p.b);
    j["c"] = matrix_to_json(p.c);
    j["omega_x"] = std::vector<double>(p.omega_x.data(), p.omega_x.data() + p.omega_x.size());
    j["omega_l"] = std::vector<double>(p.omega_l.data(), p.omega_l.data() + p.omega_l.size());
    return j.dump(2);
}

SemParameters sem_parameters_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("parameter JSON parse error: ") + e.what());
    }
    const int m = j.at("m").get<int>();
    const int n = j.at("n").get<int>();
    if (m < 0 || n < 0) throw std::invalid_argument("parameter JSON: bad dimensions");
    SemParameters p;
    p.b = matrix_from_json(j.at("b"), m, n);
    p.c = matrix_from_json(j.at("c"), n, n);
    auto ox = j.at("omega_x").get<std::vector<double>>();
    auto ol = j.at("omega_l").get<std::vector<double>>();
    if (static_cast<int>(ox.size()) != m || static_cast<int>(ol.size()) != n)
        throw std::invalid_argument("parameter JSON: bad variance length");
    p.omega_x = Eigen::Map<Eigen::VectorXd>(ox.data(), m);
    p.omega_l = Eigen::Map<Eigen::VectorXd>(ol.data(), n);
    return p;
}

}  // namespace lvcd
