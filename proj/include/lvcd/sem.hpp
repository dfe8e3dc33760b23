#pragma once

#include <Eigen/Dense>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "lvcd/latent_dag.hpp"

namespace lvcd {

// Linear-Gaussian parameterization of a LatentDag:
//   L = C L + E_L,  X = B L + E_X,
// with c(i, j) the weight of L_j -> L_i (nonzero only for j > i, so c is
// strictly upper triangular) and b(i, j) the weight of L_j -> X_i.
struct SemParameters {
    Eigen::MatrixXd b;        // m x n
    Eigen::MatrixXd c;        // n x n, strictly upper triangular
    Eigen::VectorXd omega_x;  // m, positive noise variances of E_X
    Eigen::VectorXd omega_l;  // n, positive noise variances of E_L
};

struct CovMatrix {
    Eigen::MatrixXd sigma;  // m x m symmetric positive definite
};

// Throw std::invalid_argument unless sigma is square, symmetric within
// 1e-12, and positive definite.
void validate(const CovMatrix& s);

// Throw std::invalid_argument unless shapes match g, supports are contained
// in g's adjacency, c is strictly upper, and variances are positive.
void validate(const SemParameters& p, const LatentDag& g);

// Sigma_X = B (I-C)^-1 Omega_L (I-C)^-T B^T + Omega_X.
CovMatrix implied_covariance(const SemParameters& p);

// Rescale so that omega_l becomes all-ones without changing the implied
// covariance or any support: b~ = B Omega_L^{1/2}, c~ = Omega_L^{-1/2} C
// Omega_L^{1/2}.
SemParameters normalize_omega_l(const SemParameters& p);

// (B Q, Q^T C Q) for orthogonal q; requires omega_l == 1 so the implied
// covariance is preserved.  The returned c is generally not triangular.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> orthogonal_transform(const SemParameters& p,
                                                                 const Eigen::MatrixXd& q);

// For a set of k >= 2 latents with identical parent and child sets (and at
// least k shared children, or failing that at least k parents), rotate the
// parameters so that the QR-triangularized weight block has k(k-1)/2
// structural zeros, and drop those edges from the graph.  The implied
// covariance is unchanged.
std::pair<LatentDag, SemParameters> reduce_shared_cover(const LatentDag& g, const SemParameters& p,
                                                        const std::set<NodeId>& cover);

// Edge weights uniform from [-2, -0.5] u [0.5, 2]; variances uniform from
// [2, 5].
SemParameters random_parameters(const LatentDag& g, std::mt19937_64& rng);

// t i.i.d. rows of X = B (I-C)^-1 E_L + E_X.
Eigen::MatrixXd sample_data(const SemParameters& p, int t, std::mt19937_64& rng);

std::string sem_parameters_to_json(const SemParameters& p);
SemParameters sem_parameters_from_json(const std::string& text);

}  // namespace lvcd
