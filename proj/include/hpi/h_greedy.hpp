#pragma once

#include <cstdint>
#include <random>

#include "hpi/mdp.hpp"

namespace hpi {

/**
 * Output of one depth-h backup.
 *
 * `backed_value` is T^{h-1} v, the optimal values at the children of every
 * root; `root_value` is T^{pi_h} T^{h-1} v, which equals T^h v for the exact
 * backup. For the approximate backup, `delta_drawn` holds the per-state
 * shortfall allowance and `delta_shortfall` the realized T^h v - root_value.
 */
struct TreeBackupResult {
    Policy policy;
    ValueFunction backed_value;
    ValueFunction root_value;
    int horizon = 1;
    ValueFunction delta_drawn;
    ValueFunction delta_shortfall;
};

struct GreedyNoise {
    double delta_bound = 0.0;
    std::uint64_t rng_seed = 0;
    /// Pick the worst admissible action instead of a uniformly random one.
    bool adversarial = false;
};

/// Exact h-greedy backup by h-1 optimal sweeps followed by one greedy sweep.
TreeBackupResult tree_backup(const Mdp& mdp, const ValueFunction& v, int h);

/**
 * Approximate h-greedy backup: per state a shortfall allowance is drawn from
 * U[0, delta_bound] and the returned action satisfies
 * (T^pi T^{h-1} v)(s) >= (T^h v)(s) - allowance(s).
 */
TreeBackupResult approx_tree_backup(const Mdp& mdp, const ValueFunction& v, int h,
                                    const GreedyNoise& noise);

/// Same, drawing from a caller-owned engine (used by the iteration schemes).
TreeBackupResult approx_tree_backup(const Mdp& mdp, const ValueFunction& v, int h,
                                    double delta_bound, bool adversarial,
                                    std::mt19937_64& rng);

/// T^pi T^{h-1} v == T^h v within 1e-10.
bool is_in_h_greedy_set(const Mdp& mdp, const ValueFunction& v, const Policy& pi, int h);

}  // namespace hpi
