#include "hpi/algorithms.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <random>

#include "hpi/bellman.hpp"
#include "hpi/consistency.hpp"
#include "hpi/h_greedy.hpp"

namespace hpi {

namespace {

constexpr std::array<std::pair<Scheme, std::string_view>, 7> kSchemeNames{{
    {Scheme::H_PI, "H_PI"},
    {Scheme::HM_PI, "HM_PI"},
    {Scheme::HLAMBDA_PI, "HLAMBDA_PI"},
    {Scheme::NC_HM_PI, "NC_HM_PI"},
    {Scheme::NC_HLAMBDA_PI, "NC_HLAMBDA_PI"},
    {Scheme::HM_PI_ROOT, "HM_PI_ROOT"},
    {Scheme::HLAMBDA_PI_ROOT, "HLAMBDA_PI_ROOT"},
}};

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::toupper(static_cast<unsigned char>(x)) ==
                      std::toupper(static_cast<unsigned char>(y));
           });
}

bool is_contracting_family(Scheme s) {
    return s == Scheme::HM_PI || s == Scheme::HLAMBDA_PI || s == Scheme::HM_PI_ROOT ||
           s == Scheme::HLAMBDA_PI_ROOT;
}

std::uint64_t ceil_count(double x) {
    if (!(x > 1.0)) return 1;
    return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t exact_eval_sweeps(double gamma, const CostModel& cost) {
    return ceil_count(std::log(cost.eval_tolerance * (1.0 - gamma)) / std::log(gamma));
}

}  // namespace

std::string_view to_string(Scheme scheme) {
    for (const auto& [s, name] : kSchemeNames) {
        if (s == scheme) return name;
    }
    return "UNKNOWN";
}

Scheme parse_scheme(std::string_view name) {
    for (const auto& [s, label] : kSchemeNames) {
        if (iequals(label, name)) return s;
    }
    throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

bool uses_m(Scheme scheme) {
    return scheme == Scheme::HM_PI || scheme == Scheme::NC_HM_PI || scheme == Scheme::HM_PI_ROOT;
}

bool uses_lambda(Scheme scheme) {
    return scheme == Scheme::HLAMBDA_PI || scheme == Scheme::NC_HLAMBDA_PI ||
           scheme == Scheme::HLAMBDA_PI_ROOT;
}

std::string_view to_string(StopReason reason) {
    switch (reason) {
        case StopReason::Converged: return "converged";
        case StopReason::QueryBudget: return "query_budget";
        case StopReason::MaxIterations: return "max_iterations";
        case StopReason::PolicyStable: return "policy_stable";
    }
    return "unknown";
}

void StoppingRule::check() const {
    if (value_tol && !(*value_tol > 0.0)) throw ConfigError("value_tol must be positive");
    if (max_iterations <= 0) throw ConfigError("max_iterations must be positive");
}

void AlgoConfig::check() const {
    const std::string name(to_string(scheme));
    if (h < 1) throw ConfigError("h must be at least 1");
    if (uses_m(scheme)) {
        if (!m) throw ConfigError(name + " requires m");
        if (*m < 1) throw ConfigError("m must be at least 1");
    } else if (m) {
        throw ConfigError("ConfigMismatch: m given to " + name);
    }
    if (uses_lambda(scheme)) {
        if (!lambda) throw ConfigError(name + " requires lambda");
        if (!(*lambda >= 0.0 && *lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
    } else if (lambda) {
        throw ConfigError("ConfigMismatch: lambda given to " + name);
    }
    if (!(eval_noise_bound >= 0.0) || !(greedy_noise_bound >= 0.0)) {
        throw ConfigError("noise bounds must be nonnegative");
    }
    if (scheme == Scheme::H_PI && (eval_noise_bound > 0.0 || greedy_noise_bound > 0.0)) {
        throw ConfigError("ConfigMismatch: H_PI is noiseless");
    }
    if (!(cost.series_tolerance > 0.0) || !(cost.eval_tolerance > 0.0)) {
        throw ConfigError("cost-model tolerances must be positive");
    }
    stop.check();
}

std::uint64_t query_cost(OpKind kind, const Mdp& mdp, int param, const CostModel& cost) {
    const auto s = static_cast<std::uint64_t>(mdp.n_states());
    const auto a = static_cast<std::uint64_t>(mdp.n_actions());
    switch (kind) {
        case OpKind::PolicySweep: return s;
        case OpKind::OptimalSweep: return s * a;
        case OpKind::TreeBackup: return static_cast<std::uint64_t>(std::max(param, 0)) * s * a;
        case OpKind::MReturn: return static_cast<std::uint64_t>(std::max(param, 0)) * s;
        case OpKind::ExactEvaluation: return s * exact_eval_sweeps(mdp.gamma(), cost);
    }
    return 0;
}

std::uint64_t lambda_return_cost(const Mdp& mdp, double lambda, const CostModel& cost) {
    const auto s = static_cast<std::uint64_t>(mdp.n_states());
    if (lambda <= 0.0) return s;
    if (lambda >= 1.0) return query_cost(OpKind::ExactEvaluation, mdp, 0, cost);
    const double gamma = mdp.gamma();
    const double value_span = (mdp.r_max() - mdp.r_min()) / (1.0 - gamma);
    if (!(value_span > 0.0)) return s;
    const double rate = gamma * lambda;
    return s * ceil_count(std::log(cost.series_tolerance * (1.0 - rate) / value_span) /
                          std::log(rate));
}

std::uint64_t iteration_cost(const Mdp& mdp, const AlgoConfig& cfg) {
    const auto s = static_cast<std::uint64_t>(mdp.n_states());
    const std::uint64_t improve = query_cost(OpKind::TreeBackup, mdp, cfg.h, cfg.cost);
    switch (cfg.scheme) {
        case Scheme::H_PI:
            return improve + query_cost(OpKind::ExactEvaluation, mdp, 0, cfg.cost);
        case Scheme::HM_PI:
        case Scheme::NC_HM_PI:
            return improve + query_cost(OpKind::MReturn, mdp, cfg.m.value_or(1), cfg.cost);
        case Scheme::HM_PI_ROOT:
            return improve + query_cost(OpKind::MReturn, mdp, cfg.m.value_or(1) - 1, cfg.cost);
        case Scheme::HLAMBDA_PI:
        case Scheme::NC_HLAMBDA_PI:
            return improve + lambda_return_cost(mdp, cfg.lambda.value_or(0.0), cfg.cost);
        case Scheme::HLAMBDA_PI_ROOT: {
            // The j = 0 term of the root-anchored series is the byproduct itself.
            const std::uint64_t full = lambda_return_cost(mdp, cfg.lambda.value_or(0.0), cfg.cost);
            return improve + (full > s ? full - s : 0);
        }
    }
    return improve;
}

RunReport run(const Mdp& mdp, const ValueFunction& v0, const AlgoConfig& cfg) {
    return run(mdp, optimal_value(mdp).value, v0, cfg);
}

RunReport run(const Mdp& mdp, const ValueFunction& v_star, const ValueFunction& v0,
              const AlgoConfig& cfg) {
    cfg.check();
    check_value(mdp, v0);
    check_value(mdp, v_star);
    if (!v0.allFinite()) throw std::invalid_argument("v0 must be finite");

    const int n = mdp.n_states();
    const double gamma = mdp.gamma();
    const int h = cfg.h;
    const LambdaParams lp{cfg.lambda.value_or(0.0)};
    const int m = cfg.m.value_or(1);
    const std::uint64_t cost = iteration_cost(mdp, cfg);
    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> eval_noise(-cfg.eval_noise_bound, cfg.eval_noise_bound);

    RunReport report;
    ValueFunction v = cfg.scheme == Scheme::H_PI
                          ? evaluate_policy_exact(mdp, Policy::constant(n, 0))
                          : v0;
    report.initial_dist_value = max_norm(v_star - v);

    // Shift factor of one evaluation step: Ret(x - c) = Ret(x) - return_shift * c.
    const double return_shift =
        uses_lambda(cfg.scheme)
            ? (lp.lambda >= 1.0 ? 0.0 : gamma * (1.0 - lp.lambda) / (1.0 - gamma * lp.lambda))
            : std::pow(gamma, m);
    const bool diagnose = cfg.diagnose_shift && is_contracting_family(cfg.scheme);
    ValueFunction eps = ValueFunction::Zero(n);  // noise contained in v
    double shift = 0.0;

    Policy policy;
    Policy cached_policy;
    double cached_policy_dist = 0.0;
    auto policy_dist = [&](const Policy& pi) {
        if (cached_policy.size() == 0 || !(pi == cached_policy)) {
            cached_policy = pi;
            cached_policy_dist = max_norm(v_star - evaluate_policy_exact(mdp, pi));
        }
        return cached_policy_dist;
    };

    if (cfg.stop.value_tol && report.initial_dist_value <= *cfg.stop.value_tol) {
        report.stop_reason = StopReason::Converged;
        report.final_value = v;
        report.final_policy = tree_backup(mdp, v, h).policy;
        return report;
    }

    for (int k = 1;; ++k) {
        if (k > cfg.stop.max_iterations) {
            report.stop_reason = StopReason::MaxIterations;
            break;
        }
        if (cfg.stop.query_budget > 0 && report.total_queries + cost > cfg.stop.query_budget) {
            report.stop_reason = StopReason::QueryBudget;
            break;
        }

        const TreeBackupResult backup =
            cfg.scheme == Scheme::H_PI
                ? tree_backup(mdp, v, h)
                : approx_tree_backup(mdp, v, h, cfg.greedy_noise_bound, cfg.adversarial_greedy, rng);
        const Policy& pi = backup.policy;

        IterationRecord rec;
        rec.k = k;
        rec.queries_this_iter = cost;
        rec.realized_delta_max = backup.delta_shortfall.size() ? backup.delta_shortfall.maxCoeff() : 0.0;

        if (k == 1) report.delta0 = delta0(mdp, v, pi, h);
        if (diagnose) {
            if (k == 1) {
                shift = report.delta0;
                rec.shift_constant = report.delta0;
            } else {
                const double c = noisy_shift_constant(gamma, h, rec.realized_delta_max,
                                                      eps.maxCoeff(), eps.minCoeff());
                shift = return_shift * std::pow(gamma, h - 1) * shift + c;
                rec.shift_constant = c;
            }
            const ValueFunction shifted = v - ValueFunction::Constant(n, shift);
            // Relative slack: the shifted values can be large.
            const ConsistencyReport cr = check_consistency(mdp, shifted, pi, h);
            rec.shifted_consistent =
                cr.max_violation <= 1e-12 * std::max(1.0, max_norm(shifted));
        }

        ValueFunction next;
        switch (cfg.scheme) {
            case Scheme::H_PI: next = evaluate_policy_exact(mdp, pi); break;
            case Scheme::HM_PI: next = m_return(mdp, pi, backup.backed_value, m); break;
            case Scheme::HLAMBDA_PI: next = lambda_return(mdp, pi, backup.backed_value, lp); break;
            case Scheme::NC_HM_PI: next = m_return(mdp, pi, v, m); break;
            case Scheme::NC_HLAMBDA_PI: next = lambda_return(mdp, pi, v, lp); break;
            case Scheme::HM_PI_ROOT: next = m_return(mdp, pi, backup.root_value, m - 1); break;
            case Scheme::HLAMBDA_PI_ROOT:
                next = bar_lambda_return(mdp, pi, backup.root_value, lp);
                break;
        }
        if (cfg.eval_noise_bound > 0.0) {
            for (int s = 0; s < n; ++s) eps(s) = eval_noise(rng);
            next += eps;
            rec.realized_eps_max = max_norm(eps);
        }

        rec.dist_value = max_norm(v_star - next);
        rec.dist_policy_value = policy_dist(pi);
        report.total_queries += cost;
        report.iterations.push_back(rec);

        const bool policy_repeated = policy == pi;
        policy = pi;
        v = std::move(next);

        if (cfg.stop.value_tol && rec.dist_value <= *cfg.stop.value_tol) {
            report.stop_reason = StopReason::Converged;
            break;
        }
        if (cfg.scheme == Scheme::H_PI && policy_repeated) {
            report.stop_reason = StopReason::PolicyStable;
            break;
        }
    }

    report.final_value = v;
    report.final_policy = policy.size() ? policy : tree_backup(mdp, v, h).policy;
    return report;
}

}  // namespace hpi
