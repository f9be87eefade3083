#pragma once

#include "hpi/mdp.hpp"

namespace hpi {

struct LambdaParams {
    double lambda = 0.0;
    /// Truncation threshold for the series-form cross-checks only.
    double series_tolerance = 1e-12;

    void check() const;
};

/// T^pi v = r^pi + gamma P^pi v.
ValueFunction apply_t_pi(const Mdp& mdp, const Policy& pi, const ValueFunction& v);

/// Q(s, a) = r(s, a) + gamma sum_s' P(s'|s,a) v(s'), as an |S|x|A| matrix.
Eigen::MatrixXd q_values(const Mdp& mdp, const ValueFunction& v);

/// Tv = max_a Q(s, a).
ValueFunction apply_t_opt(const Mdp& mdp, const ValueFunction& v);

/// h successive applications of T (h = 0 returns v).
ValueFunction apply_t_opt_n(const Mdp& mdp, const ValueFunction& v, int h);

/// One element of G(v); ties go to the lowest action index.
Policy greedy_policy(const Mdp& mdp, const ValueFunction& v);

/// (T^pi)^m v, m >= 0.
ValueFunction m_return(const Mdp& mdp, const Policy& pi, const ValueFunction& v, int m);

/// T^pi_lambda v = v + (I - gamma lambda P^pi)^{-1} (T^pi v - v).
ValueFunction lambda_return(const Mdp& mdp, const Policy& pi, const ValueFunction& v,
                            const LambdaParams& lp);

/// (1 - lambda) sum_j lambda^j (T^pi)^{j+1} v, truncated once the tail is below
/// lp.series_tolerance. Independent of the linear solve in lambda_return().
ValueFunction lambda_return_series(const Mdp& mdp, const Policy& pi, const ValueFunction& v,
                                   const LambdaParams& lp);

/// The root-anchored variant: (1 - lambda) sum_j lambda^j (T^pi)^j v
/// = v + lambda (I - gamma lambda P^pi)^{-1} (T^pi v - v).
ValueFunction bar_lambda_return(const Mdp& mdp, const Policy& pi, const ValueFunction& v,
                                const LambdaParams& lp);

ValueFunction bar_lambda_return_series(const Mdp& mdp, const Policy& pi,
                                       const ValueFunction& v, const LambdaParams& lp);

}  // namespace hpi
