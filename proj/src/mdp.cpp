#include "hpi/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hpi/bellman.hpp"

namespace hpi {

namespace {

constexpr double kRowSumTolerance = 1e-12;
constexpr double kEvalResidual = 1e-12;

}  // namespace

Mdp::Mdp(int n_states, int n_actions, std::vector<double> transitions,
         std::vector<double> rewards, double gamma, std::optional<double> r_min,
         std::optional<double> r_max)
    : n_states_(n_states),
      n_actions_(n_actions),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)),
      gamma_(gamma) {
    if (n_states <= 0 || n_actions <= 0) {
        throw std::invalid_argument("Mdp: n_states and n_actions must be positive");
    }
    const auto sa = static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions);
    if (rewards_.size() != sa) {
        throw std::invalid_argument("Mdp: rewards must have |S|*|A| entries");
    }
    if (transitions_.size() != sa * static_cast<std::size_t>(n_states)) {
        throw std::invalid_argument("Mdp: transitions must have |S|*|A|*|S| entries");
    }
    const auto [lo, hi] = std::minmax_element(rewards_.begin(), rewards_.end());
    r_min_ = r_min.value_or(*lo);
    r_max_ = r_max.value_or(*hi);

    row_begin_.reserve(sa + 1);
    row_begin_.push_back(0);
    for (std::size_t i = 0; i < sa; ++i) {
        const double* row = transitions_.data() + i * static_cast<std::size_t>(n_states);
        for (int next = 0; next < n_states; ++next) {
            if (row[next] != 0.0) successors_.push_back({next, row[next]});
        }
        row_begin_.push_back(successors_.size());
    }
}

const char* to_string(IssueKind kind) {
    switch (kind) {
        case IssueKind::NonStochasticRow: return "NonStochasticRow";
        case IssueKind::RewardOutOfBounds: return "RewardOutOfBounds";
        case IssueKind::BadDiscount: return "BadDiscount";
    }
    return "Unknown";
}

std::string ValidationReport::summary() const {
    if (issues.empty()) return "ok";
    std::ostringstream out;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) out << "; ";
        out << to_string(issues[i].kind);
        if (issues[i].state >= 0) out << '(' << issues[i].state << ',' << issues[i].action << ')';
        if (!issues[i].message.empty()) out << ": " << issues[i].message;
    }
    return out.str();
}

ValidationReport validate(const Mdp& mdp) {
    ValidationReport report;
    const double gamma = mdp.gamma();
    if (!(gamma > 0.0 && gamma < 1.0)) {
        std::ostringstream msg;
        msg << "gamma = " << gamma << " outside (0, 1)";
        report.issues.push_back({IssueKind::BadDiscount, -1, -1, msg.str()});
    }
    const int n = mdp.n_states();
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            double sum = 0.0;
            bool negative = false;
            bool finite = true;
            for (int next = 0; next < n; ++next) {
                const double p = mdp.transition(s, a, next);
                if (!std::isfinite(p)) finite = false;
                if (p < 0.0) negative = true;
                sum += p;
            }
            if (!finite || negative || std::abs(sum - 1.0) > kRowSumTolerance) {
                std::ostringstream msg;
                msg << "row sums to " << sum << (negative ? " with negative entries" : "");
                report.issues.push_back({IssueKind::NonStochasticRow, s, a, msg.str()});
            }
            const double r = mdp.reward(s, a);
            if (!std::isfinite(r) || r < mdp.r_min() || r > mdp.r_max()) {
                std::ostringstream msg;
                msg << "reward " << r << " outside [" << mdp.r_min() << ", " << mdp.r_max() << ']';
                report.issues.push_back({IssueKind::RewardOutOfBounds, s, a, msg.str()});
            }
        }
    }
    return report;
}

void require_valid(const Mdp& mdp) {
    auto report = validate(mdp);
    if (!report.ok()) throw InvalidMdp(std::move(report));
}

void check_policy(const Mdp& mdp, const Policy& pi) {
    if (pi.size() != static_cast<std::size_t>(mdp.n_states())) {
        throw std::invalid_argument("policy length does not match the number of states");
    }
    for (std::size_t s = 0; s < pi.size(); ++s) {
        if (pi[s] < 0 || pi[s] >= mdp.n_actions()) {
            throw std::invalid_argument("policy action out of range at state " + std::to_string(s));
        }
    }
}

void check_value(const Mdp& mdp, const ValueFunction& v) {
    if (v.size() != mdp.n_states()) {
        throw std::invalid_argument("value function length does not match the number of states");
    }
}

Eigen::MatrixXd policy_transition_matrix(const Mdp& mdp, const Policy& pi) {
    check_policy(mdp, pi);
    const int n = mdp.n_states();
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < n; ++s) {
        for (const auto& [next, prob] : mdp.successors(s, pi[s])) p(s, next) = prob;
    }
    return p;
}

ValueFunction policy_rewards(const Mdp& mdp, const Policy& pi) {
    check_policy(mdp, pi);
    ValueFunction r(mdp.n_states());
    for (int s = 0; s < mdp.n_states(); ++s) r(s) = mdp.reward(s, pi[s]);
    return r;
}

ValueFunction evaluate_policy_exact(const Mdp& mdp, const Policy& pi) {
    const int n = mdp.n_states();
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * policy_transition_matrix(mdp, pi);
    const ValueFunction r = policy_rewards(mdp, pi);
    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
    ValueFunction v = lu.solve(r);
    // Iterative refinement; a couple of rounds reach the residual target for
    // any well-conditioned system (the condition number is at most (1+g)/(1-g)).
    ValueFunction residual = r - a * v;
    for (int round = 0; round < 4 && max_norm(residual) > kEvalResidual; ++round) {
        v += lu.solve(residual);
        residual = r - a * v;
    }
    const double scale = std::max(1.0, max_norm(v));
    if (!v.allFinite() ||
        max_norm(residual) > std::max(kEvalResidual, 16 * std::numeric_limits<double>::epsilon() * scale)) {
        throw SolverFailure("evaluate_policy_exact: residual tolerance not reached");
    }
    return v;
}

OptimalSolution optimal_value(const Mdp& mdp) {
    const double gamma = mdp.gamma();
    const double target = 1e-12 * (1.0 - gamma);
    OptimalSolution sol;
    ValueFunction v = ValueFunction::Zero(mdp.n_states());
    double best = std::numeric_limits<double>::infinity();
    int stalled = 0;
    // Value iteration; bail out to the polish once rounding stalls progress.
    for (;;) {
        ValueFunction next = apply_t_opt(mdp, v);
        const double res = max_norm(next - v);
        v = std::move(next);
        ++sol.sweeps;
        if (res <= target) break;
        if (res < best) {
            best = res;
            stalled = 0;
        } else if (++stalled > 50) {
            break;
        }
    }
    sol.residual = max_norm(apply_t_opt(mdp, v) - v);
    if (sol.residual > target) {
        // Policy-iteration polish from the value-iteration warm start.
        Policy pi = greedy_policy(mdp, v);
        for (int round = 0; round < 100; ++round) {
            v = evaluate_policy_exact(mdp, pi);
            Policy improved = greedy_policy(mdp, v);
            if (improved == pi) break;
            // Only switch where the improvement is real; avoids cycling on ties.
            const Eigen::MatrixXd q = q_values(mdp, v);
            bool changed = false;
            for (int s = 0; s < mdp.n_states(); ++s) {
                if (q(s, improved[s]) > q(s, pi[s]) + 1e-15 * std::max(1.0, std::abs(v(s)))) {
                    pi[s] = improved[s];
                    changed = true;
                }
            }
            if (!changed) break;
        }
        sol.residual = max_norm(apply_t_opt(mdp, v) - v);
    }
    sol.value = std::move(v);
    sol.policy = greedy_policy(mdp, sol.value);
    return sol;
}

}  // namespace hpi
