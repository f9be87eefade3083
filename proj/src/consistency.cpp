#include "hpi/consistency.hpp"

#include <algorithm>
#include <cmath>

#include "hpi/h_greedy.hpp"

namespace hpi {

namespace {

// max_s (T^{h-1}v - T^pi T^{h-1}v)(s), unclipped.
double raw_violation(const Mdp& mdp, const ValueFunction& v, const Policy& pi, int h) {
    if (h < 1) throw std::invalid_argument("horizon h must be at least 1");
    const ValueFunction backed = apply_t_opt_n(mdp, v, h - 1);
    const ValueFunction root = apply_t_pi(mdp, pi, backed);
    return (backed - root).maxCoeff();
}

double shift_scale(double gamma, int h) { return std::pow(gamma, h - 1) * (1.0 - gamma); }

}  // namespace

ConsistencyReport check_consistency(const Mdp& mdp, const ValueFunction& v, const Policy& pi,
                                    int h) {
    const double raw = raw_violation(mdp, v, pi, h);
    ConsistencyReport report;
    report.max_violation = std::max(0.0, raw);
    report.consistent = report.max_violation <= kConsistencyTolerance;
    report.shift_delta = raw > 0.0 ? raw / shift_scale(mdp.gamma(), h) : 0.0;
    return report;
}

ValueFunction shift_to_consistent(const Mdp& mdp, const ValueFunction& v, const Policy& pi,
                                  int h) {
    const double delta = check_consistency(mdp, v, pi, h).shift_delta;
    if (delta == 0.0) return v;
    return v - ValueFunction::Constant(v.size(), delta);
}

double delta0(const Mdp& mdp, const ValueFunction& v0, const Policy& pi1, int h) {
    return std::max(0.0, raw_violation(mdp, v0, pi1, h) / shift_scale(mdp.gamma(), h));
}

bool verify_monotone_chain(const Mdp& mdp, const ValueFunction& v, const Policy& pi, int h,
                           int l_max) {
    if (l_max < 1) throw std::invalid_argument("l_max must be at least 1");
    const auto report = check_consistency(mdp, v, pi, h);
    if (!report.consistent) {
        throw PreconditionViolated("verify_monotone_chain: (v, pi) is not h-greedy consistent");
    }
    constexpr double slack = 1e-10;
    ValueFunction prev = apply_t_opt_n(mdp, v, h - 1);
    for (int l = 1; l <= l_max; ++l) {
        ValueFunction next = apply_t_pi(mdp, pi, prev);
        if ((prev - next).maxCoeff() > slack) return false;
        prev = std::move(next);
    }
    const ValueFunction v_pi = evaluate_policy_exact(mdp, pi);
    return (prev - v_pi).maxCoeff() <= slack;
}

ContractionRatios verify_gamma_h_contraction(const Mdp& mdp, const ValueFunction& v_star,
                                             const ValueFunction& v, int h, int m,
                                             const LambdaParams& lp) {
    if (m < 1) throw std::invalid_argument("m must be at least 1");
    const double denom = max_norm(v_star - v);
    if (denom < 1e-12) {
        throw DivisionDegenerate("verify_gamma_h_contraction: v is already optimal");
    }
    const TreeBackupResult backup = tree_backup(mdp, v, h);
    ContractionRatios ratios;
    ratios.m_return = max_norm(v_star - m_return(mdp, backup.policy, backup.backed_value, m)) / denom;
    ratios.lambda_return =
        max_norm(v_star - lambda_return(mdp, backup.policy, backup.backed_value, lp)) / denom;
    return ratios;
}

ContractionRatios verify_gamma_h_contraction(const Mdp& mdp, const ValueFunction& v, int h,
                                             int m, const LambdaParams& lp) {
    return verify_gamma_h_contraction(mdp, optimal_value(mdp).value, v, h, m, lp);
}

double noisy_shift_constant(double gamma, int h, double delta_next_max, double eps_max,
                            double eps_min) {
    const double g = std::pow(gamma, h - 1);
    return (delta_next_max + g * eps_max - g * gamma * eps_min) / (g * (1.0 - gamma));
}

}  // namespace hpi
