#pragma once

#include <utility>

#include "hpi/bellman.hpp"
#include "hpi/mdp.hpp"

namespace hpi {

/// Componentwise slack used by every consistency decision.
inline constexpr double kConsistencyTolerance = 1e-12;

/**
 * Result of testing T^pi T^{h-1} v >= T^{h-1} v.
 *
 * `max_violation` is max_s (T^{h-1}v - T^pi T^{h-1}v)(s) clipped at zero;
 * `shift_delta` is the constant that, subtracted from v, closes the gap:
 * unclipped violation / (gamma^{h-1} (1 - gamma)) when positive, else 0.
 */
struct ConsistencyReport {
    bool consistent = true;
    double max_violation = 0.0;
    double shift_delta = 0.0;
};

ConsistencyReport check_consistency(const Mdp& mdp, const ValueFunction& v, const Policy& pi,
                                    int h);

/// v - shift_delta e. The returned pair (v', pi) is consistent.
ValueFunction shift_to_consistent(const Mdp& mdp, const ValueFunction& v, const Policy& pi,
                                  int h);

/// max{0, max_s (T^{h-1}v0 - T^{pi1} T^{h-1} v0)(s) / (gamma^{h-1}(1 - gamma))}.
double delta0(const Mdp& mdp, const ValueFunction& v0, const Policy& pi1, int h);

/**
 * Checks that (T^pi)^l T^{h-1} v is nondecreasing for l = 0..l_max and that the
 * last iterate stays below v^pi (1e-10 slack on both).
 * Throws PreconditionViolated when (v, pi) is not consistent.
 */
bool verify_monotone_chain(const Mdp& mdp, const ValueFunction& v, const Policy& pi, int h,
                           int l_max);

struct ContractionRatios {
    double m_return = 0.0;       ///< ||v* - (T^pi_h)^m T^{h-1}v|| / ||v* - v||
    double lambda_return = 0.0;  ///< ||v* - T^pi_h_lambda T^{h-1}v|| / ||v* - v||
};

/**
 * Contraction ratios of the byproduct-backed partial evaluations, with
 * pi_h = tree_backup(v, h).policy. Throws DivisionDegenerate when
 * ||v* - v|| < 1e-12. The caller checks both ratios against gamma^h.
 */
ContractionRatios verify_gamma_h_contraction(const Mdp& mdp, const ValueFunction& v, int h,
                                             int m, const LambdaParams& lp);

/// Same with a precomputed v*.
ContractionRatios verify_gamma_h_contraction(const Mdp& mdp, const ValueFunction& v_star,
                                             const ValueFunction& v, int h, int m,
                                             const LambdaParams& lp);

/// C_k = (max delta_{k+1} + gamma^{h-1} max eps_k - gamma^h min eps_k) / (gamma^{h-1}(1-gamma)).
/// Diagnostic only: the shift that keeps the noisy process consistent.
double noisy_shift_constant(double gamma, int h, double delta_next_max, double eps_max,
                            double eps_min);

}  // namespace hpi
