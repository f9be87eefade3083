#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hpi/mdp.hpp"

namespace hpi {

enum class Scheme {
    H_PI,             ///< h-greedy improvement, exact evaluation
    HM_PI,            ///< (T^pi)^m T^{h-1} v_k + eps_k
    HLAMBDA_PI,       ///< T^pi_lambda T^{h-1} v_k + eps_k
    NC_HM_PI,         ///< (T^pi)^m v_k + eps_k
    NC_HLAMBDA_PI,    ///< T^pi_lambda v_k + eps_k
    HM_PI_ROOT,       ///< (T^pi)^{m-1} (T^pi T^{h-1} v_k) + eps_k
    HLAMBDA_PI_ROOT,  ///< bar-T^pi_lambda (T^pi T^{h-1} v_k) + eps_k
};

std::string_view to_string(Scheme scheme);
/// Accepts the enumerator names, case-insensitively ("hm_pi", "HM_PI", ...).
Scheme parse_scheme(std::string_view name);

bool uses_m(Scheme scheme);
bool uses_lambda(Scheme scheme);

struct StoppingRule {
    /// Stop once ||v* - v_k|| <= value_tol.
    std::optional<double> value_tol;
    /// Stop before an iteration that would exceed this many simulator calls; 0 = unlimited.
    std::uint64_t query_budget = 0;
    int max_iterations = 100000;

    void check() const;
};

/// Parameters of the simulator-call cost model.
struct CostModel {
    /// Series truncation threshold charged for a lambda-return.
    double series_tolerance = 1e-10;
    /// Tail tolerance charged for an exact evaluation.
    double eval_tolerance = 1e-7;
};

struct AlgoConfig {
    Scheme scheme = Scheme::HM_PI;
    int h = 1;
    std::optional<int> m;
    std::optional<double> lambda;
    double eval_noise_bound = 0.0;
    double greedy_noise_bound = 0.0;
    bool adversarial_greedy = false;
    std::uint64_t rng_seed = 0;
    StoppingRule stop;
    CostModel cost;
    /// Record C_k and the consistency of the shifted pair each iteration.
    bool diagnose_shift = false;

    /// Throws ConfigError for out-of-range values or parameters that do not
    /// belong to the scheme (e.g. lambda on an m-scheme).
    void check() const;
};

struct IterationRecord {
    int k = 0;
    double dist_value = 0.0;         ///< ||v* - v_k||
    double dist_policy_value = 0.0;  ///< ||v* - v^{pi_k}||
    std::uint64_t queries_this_iter = 0;
    double realized_eps_max = 0.0;
    double realized_delta_max = 0.0;
    std::optional<double> shift_constant;
    std::optional<bool> shifted_consistent;
};

enum class StopReason { Converged, QueryBudget, MaxIterations, PolicyStable };

std::string_view to_string(StopReason reason);

struct RunReport {
    std::vector<IterationRecord> iterations;
    Policy final_policy;
    ValueFunction final_value;
    std::uint64_t total_queries = 0;
    StopReason stop_reason = StopReason::MaxIterations;
    double initial_dist_value = 0.0;
    /// Delta_0 of the initial pair (v0, pi_1); 0 when no iteration ran.
    double delta0 = 0.0;
};

/**
 * Runs one policy-iteration scheme.
 *
 * Each iteration draws the improvement policy from the (delta-noisy)
 * depth-h backup of v_k, then evaluates per scheme, adding per-state
 * U[-eps, eps] noise. Record k describes v_k and pi_k after the k-th
 * iteration. H_PI ignores `v0` and starts from v^{pi_0} with pi_0 = action 0.
 */
RunReport run(const Mdp& mdp, const ValueFunction& v0, const AlgoConfig& cfg);

/// Same with a precomputed v*.
RunReport run(const Mdp& mdp, const ValueFunction& v_star, const ValueFunction& v0,
              const AlgoConfig& cfg);

enum class OpKind { PolicySweep, OptimalSweep, TreeBackup, MReturn, ExactEvaluation };

/**
 * Simulator calls charged for one operation; one call is one (s, a) access.
 * `param` is h for TreeBackup and m for MReturn, ignored otherwise.
 */
std::uint64_t query_cost(OpKind kind, const Mdp& mdp, int param, const CostModel& cost = {});

/// Charge for a lambda-return: the series length needed to reach
/// cost.series_tolerance on a value span of (r_max - r_min)/(1 - gamma).
std::uint64_t lambda_return_cost(const Mdp& mdp, double lambda, const CostModel& cost = {});

/// Charge for one full iteration of the configured scheme.
std::uint64_t iteration_cost(const Mdp& mdp, const AlgoConfig& cfg);

}  // namespace hpi
