#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <vector>

#include "lvcd/latent_dag.hpp"
#include "lvcd/sem.hpp"

namespace lvcd {

// One deduction applied by dof_hierarchical: a maximal group of k >= 2
// latents sharing identical parent and child sets loses k(k-1)/2 free
// parameters to rotational symmetry.
struct DofReduction {
    std::vector<int> latents;  // ascending latent indices
    long deduction = 0;        // k(k-1)/2
};

struct DofReport {
    long combinatorial = 0;           // |edges| + m minus all deductions
    std::optional<long> numeric;      // Jacobian rank, when computed
    std::vector<DofReduction> reductions;
};

// |edges| + m.  Requires satisfies_one_factor(g).
long dof_one_factor(const LatentDag& g);

// Starts from |edges| + m and subtracts k(k-1)/2 for every maximal latent
// group of size k >= 2 whose members share identical parent and child sets.
// Requires satisfies_hierarchical(g).
DofReport dof_hierarchical(const LatentDag& g);

// min(|edges| + m, m(m+1)/2), an upper bound on the model dimension.
long dof_upper_bound(const LatentDag& g);

// Analytic Jacobian of the parameterization map
//   (edge weights of b and c in the pack_parameters order, then omega_x)
//     -> vech(implied covariance)
// evaluated at p (omega_l must be all-ones).  Rows are the lower-triangular
// covariance entries column by column; columns follow the parameter order.
Eigen::MatrixXd covariance_jacobian(const LatentDag& g, const SemParameters& p);

// Maximum numerical rank of covariance_jacobian over `trials` random
// parameter draws; this is the generic dimension of the model's image.
long dof_numeric(const LatentDag& g, int trials, std::mt19937_64& rng);

}  // namespace lvcd
