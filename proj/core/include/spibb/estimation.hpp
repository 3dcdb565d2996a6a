#pragma once

#include "spibb/model.hpp"

namespace spibb {

/// Maximum-likelihood model plus the visit counts it was built from.
struct MleResult {
    Mdp mdp;
    CountTable counts;
};

/// Visit counts N(x,a) of a dataset.
CountTable count_visits(const Dataset& dataset);

/// Maximum-likelihood MDP from a batch: empirical transition frequencies and
/// mean rewards where N(x,a) > 0. Unobserved (x,a) default to a self-loop
/// with reward 0 (deterministic and harmless to the safe algorithms, which
/// never raise mass on unvisited pairs; plain greedy solvers see that default
/// and their behavior under it is part of this function's contract).
MleResult estimate_mle(const Dataset& dataset, const MdpShape& shape, double gamma, double r_max);

/// One fitted-Q backup over the batch:
///   Q(x,a) = (1/N(x,a)) * sum over samples j at (x,a) of
///            [ r_j + gamma * sum_a' pi(a'|x'_j) q_prev(x'_j,a') ]
/// with terminal next-states contributing zero continuation. Pairs with
/// N(x,a)=0 receive the self-loop-default backup
/// gamma * sum_a' pi(a'|x) q_prev(x,a') (0 at terminal states), which makes
/// the update coincide with the model-based backup through estimate_mle at
/// every pair.
QTable fitted_q_update(const Dataset& dataset, const MdpShape& shape, const PolicyTable& policy,
                       const QTable& q_prev, double gamma);

}  // namespace spibb
