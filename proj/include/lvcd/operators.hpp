#pragma once

#include "lvcd/latent_dag.hpp"

namespace lvcd {

// Skeleton completion: for each atomic cover L, add edges from every member
// of L to every pure child of L not already accounted for by an atomic
// sub-cover of L.  Applied to fixpoint; latents are relabeled topologically
// if an added latent edge violates the index convention.
LatentDag op_skeleton(const LatentDag& g);

// Minimal-graph reduction: merge an atomic cover L into its parent cover P
// when (i) L is a pure-child set of P, (ii) both are all-latent with
// |L| == |P|, and (iii) the pure children of L, or the siblings of L, form a
// single atomic cover.  L is deleted and its children re-attached to P.
// Applied to fixpoint.
LatentDag op_min(const LatentDag& g);

// Intra-cover completion: fully connect every atomic cover with >= 2
// members (orientation follows the latent index ordering).  Applied to
// fixpoint.
LatentDag op_atomic(const LatentDag& g);

}  // namespace lvcd
