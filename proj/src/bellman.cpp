#include "hpi/bellman.hpp"

#include <cmath>
#include <limits>

namespace hpi {

namespace {

double expected_next(const Mdp& mdp, int s, int a, const ValueFunction& v) {
    double acc = 0.0;
    for (const auto& [next, prob] : mdp.successors(s, a)) acc += prob * v(next);
    return acc;
}

// Hard cap on series terms; only reached when gamma * lambda is within 1e-6 of 1.
constexpr int kMaxSeriesTerms = 10'000'000;

}  // namespace

void LambdaParams::check() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("lambda must lie in [0, 1]");
    }
    if (!(series_tolerance > 0.0)) {
        throw std::invalid_argument("series_tolerance must be positive");
    }
}

ValueFunction apply_t_pi(const Mdp& mdp, const Policy& pi, const ValueFunction& v) {
    check_policy(mdp, pi);
    check_value(mdp, v);
    ValueFunction out(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) {
        out(s) = mdp.reward(s, pi[s]) + mdp.gamma() * expected_next(mdp, s, pi[s], v);
    }
    return out;
}

Eigen::MatrixXd q_values(const Mdp& mdp, const ValueFunction& v) {
    check_value(mdp, v);
    Eigen::MatrixXd q(mdp.n_states(), mdp.n_actions());
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            q(s, a) = mdp.reward(s, a) + mdp.gamma() * expected_next(mdp, s, a, v);
        }
    }
    return q;
}

ValueFunction apply_t_opt(const Mdp& mdp, const ValueFunction& v) {
    return q_values(mdp, v).rowwise().maxCoeff();
}

ValueFunction apply_t_opt_n(const Mdp& mdp, const ValueFunction& v, int h) {
    if (h < 0) throw std::invalid_argument("apply_t_opt_n: negative power");
    ValueFunction out = v;
    for (int i = 0; i < h; ++i) out = apply_t_opt(mdp, out);
    return out;
}

Policy greedy_policy(const Mdp& mdp, const ValueFunction& v) {
    const Eigen::MatrixXd q = q_values(mdp, v);
    std::vector<int> actions(mdp.n_states(), 0);
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 1; a < mdp.n_actions(); ++a) {
            if (q(s, a) > q(s, actions[s])) actions[s] = a;
        }
    }
    return Policy(std::move(actions));
}

ValueFunction m_return(const Mdp& mdp, const Policy& pi, const ValueFunction& v, int m) {
    if (m < 0) throw std::invalid_argument("m_return: m must be nonnegative");
    check_value(mdp, v);
    ValueFunction out = v;
    for (int i = 0; i < m; ++i) out = apply_t_pi(mdp, pi, out);
    return out;
}

namespace {

// (I - gamma lambda P^pi)^{-1} rhs.
ValueFunction solve_td(const Mdp& mdp, const Policy& pi, double lambda, const ValueFunction& rhs) {
    const int n = mdp.n_states();
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n) -
                              mdp.gamma() * lambda * policy_transition_matrix(mdp, pi);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    ValueFunction x = lu.solve(rhs);
    ValueFunction residual = rhs - a * x;
    for (int round = 0; round < 4 && max_norm(residual) > 1e-12; ++round) {
        x += lu.solve(residual);
        residual = rhs - a * x;
    }
    const double scale = std::max(1.0, max_norm(x));
    if (!x.allFinite() ||
        max_norm(residual) > std::max(1e-12, 16 * std::numeric_limits<double>::epsilon() * scale)) {
        throw SolverFailure("lambda-return solve did not reach its residual tolerance");
    }
    return x;
}

// Terms J so that the remainder bound (gamma lambda)^J d / (1 - gamma) drops
// below tol, where d = ||T^pi v - v||.
int series_terms(double gamma, double lambda, double d, double tol) {
    const double bound = d / (1.0 - gamma);
    if (bound <= tol) return 1;
    const double rate = gamma * lambda;
    if (rate <= 0.0) return 1;
    const double j = std::ceil(std::log(tol / bound) / std::log(rate));
    if (!(j < kMaxSeriesTerms)) return kMaxSeriesTerms;
    return std::max(1, static_cast<int>(j));
}

}  // namespace

ValueFunction lambda_return(const Mdp& mdp, const Policy& pi, const ValueFunction& v,
                            const LambdaParams& lp) {
    lp.check();
    const ValueFunction tv = apply_t_pi(mdp, pi, v);
    if (lp.lambda == 0.0) return tv;
    return v + solve_td(mdp, pi, lp.lambda, tv - v);
}

ValueFunction bar_lambda_return(const Mdp& mdp, const Policy& pi, const ValueFunction& v,
                                const LambdaParams& lp) {
    lp.check();
    if (lp.lambda == 0.0) {
        check_policy(mdp, pi);
        check_value(mdp, v);
        return v;
    }
    const ValueFunction tv = apply_t_pi(mdp, pi, v);
    return v + lp.lambda * solve_td(mdp, pi, lp.lambda, tv - v);
}

ValueFunction lambda_return_series(const Mdp& mdp, const Policy& pi, const ValueFunction& v,
                                   const LambdaParams& lp) {
    lp.check();
    const double lambda = lp.lambda;
    ValueFunction x = apply_t_pi(mdp, pi, v);  // (T^pi)^{j+1} v for j = 0
    const int terms = series_terms(mdp.gamma(), lambda, max_norm(x - v), lp.series_tolerance);
    ValueFunction acc = ValueFunction::Zero(v.size());
    double weight = 1.0;  // lambda^j
    for (int j = 0; j < terms; ++j) {
        acc += (1.0 - lambda) * weight * x;
        weight *= lambda;
        x = apply_t_pi(mdp, pi, x);
    }
    // Remaining mass (1 - lambda) sum_{j >= J} lambda^j = lambda^J sits on the
    // latest iterate; the error of that approximation is the bound above.
    return acc + weight * x;
}

ValueFunction bar_lambda_return_series(const Mdp& mdp, const Policy& pi,
                                       const ValueFunction& v, const LambdaParams& lp) {
    lp.check();
    const double lambda = lp.lambda;
    ValueFunction x = v;  // (T^pi)^j v for j = 0
    const int terms =
        series_terms(mdp.gamma(), lambda, max_norm(apply_t_pi(mdp, pi, v) - v), lp.series_tolerance);
    ValueFunction acc = ValueFunction::Zero(v.size());
    double weight = 1.0;
    for (int j = 0; j <= terms; ++j) {
        acc += (1.0 - lambda) * weight * x;
        weight *= lambda;
        x = apply_t_pi(mdp, pi, x);
    }
    return acc + weight * x;
}

}  // namespace hpi
