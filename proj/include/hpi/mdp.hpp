#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hpi {

/// Real vector indexed by state: v, v^pi, v*, and intermediate backups.
using ValueFunction = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverFailure : public Error {
public:
    using Error::Error;
};

class PreconditionViolated : public Error {
public:
    using Error::Error;
};

class DivisionDegenerate : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Deterministic stationary policy, one action index per state.
class Policy {
public:
    Policy() = default;
    explicit Policy(std::vector<int> actions) : actions_(std::move(actions)) {}

    static Policy constant(std::size_t n_states, int action) {
        return Policy(std::vector<int>(n_states, action));
    }

    std::size_t size() const { return actions_.size(); }
    int operator[](std::size_t s) const { return actions_[s]; }
    int& operator[](std::size_t s) { return actions_[s]; }
    const std::vector<int>& actions() const { return actions_; }

    bool operator==(const Policy&) const = default;

private:
    std::vector<int> actions_;
};

/// One nonzero entry of a transition row.
struct Successor {
    int state;
    double prob;
};

/**
 * Finite discounted MDP with dense storage.
 *
 * Transitions are stored as a flat |S|x|A|x|S| tensor indexed
 * `(s * n_actions + a) * n_states + s'`; rewards as a flat |S|x|A| table.
 * The constructor checks shapes only. Stochasticity, reward bounds and the
 * discount range are checked by validate().
 *
 * A sparse successor list is built once at construction; the Bellman sweeps
 * iterate over it, so deterministic models cost O(|S||A|) per sweep.
 */
class Mdp {
public:
    Mdp(int n_states, int n_actions, std::vector<double> transitions,
        std::vector<double> rewards, double gamma,
        std::optional<double> r_min = std::nullopt,
        std::optional<double> r_max = std::nullopt);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    double gamma() const { return gamma_; }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }

    double transition(int s, int a, int next) const {
        return transitions_[index(s, a) * static_cast<std::size_t>(n_states_) + next];
    }
    double reward(int s, int a) const { return rewards_[index(s, a)]; }

    std::span<const Successor> successors(int s, int a) const {
        const std::size_t i = index(s, a);
        return {successors_.data() + row_begin_[i], row_begin_[i + 1] - row_begin_[i]};
    }

    const std::vector<double>& transitions() const { return transitions_; }
    const std::vector<double>& rewards() const { return rewards_; }

private:
    std::size_t index(int s, int a) const {
        return static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions_) + a;
    }

    int n_states_;
    int n_actions_;
    std::vector<double> transitions_;
    std::vector<double> rewards_;
    double gamma_;
    double r_min_;
    double r_max_;
    std::vector<Successor> successors_;
    std::vector<std::size_t> row_begin_;
};

enum class IssueKind { NonStochasticRow, RewardOutOfBounds, BadDiscount };

const char* to_string(IssueKind kind);

struct ValidationIssue {
    IssueKind kind;
    int state = -1;
    int action = -1;
    std::string message;
};

/// Every violated invariant of an Mdp; empty when the model is valid.
struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const { return issues.empty(); }
    std::string summary() const;
};

ValidationReport validate(const Mdp& mdp);

/// Thrown by loaders when a model fails validation.
class InvalidMdp : public Error {
public:
    explicit InvalidMdp(ValidationReport report)
        : Error("invalid MDP: " + report.summary()), report_(std::move(report)) {}

    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

/// Throws InvalidMdp unless validate() succeeds.
void require_valid(const Mdp& mdp);

/// Throws std::invalid_argument when `pi` has the wrong length or an out-of-range action.
void check_policy(const Mdp& mdp, const Policy& pi);
void check_value(const Mdp& mdp, const ValueFunction& v);

inline double max_norm(const ValueFunction& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

inline double span(const ValueFunction& v) {
    return v.size() == 0 ? 0.0 : v.maxCoeff() - v.minCoeff();
}

// Exact policy evaluation and the optimal-value oracle.

/// Dense P^pi, rows indexed by state.
Eigen::MatrixXd policy_transition_matrix(const Mdp& mdp, const Policy& pi);

/// r^pi.
ValueFunction policy_rewards(const Mdp& mdp, const Policy& pi);

/// v^pi = (I - gamma P^pi)^{-1} r^pi, solved to a max-norm residual of 1e-12.
ValueFunction evaluate_policy_exact(const Mdp& mdp, const Policy& pi);

struct OptimalSolution {
    ValueFunction value;
    Policy policy;
    int sweeps = 0;
    /// Final ||Tv - v||_inf.
    double residual = 0.0;
};

/**
 * v* by value iteration, stopped once ||Tv - v|| <= 1e-12 (1 - gamma).
 *
 * When floating-point rounding keeps the residual above that threshold the
 * iterate is polished by exact evaluation of its greedy policy (repeated until
 * the greedy policy is stable), which makes v* exact up to rounding.
 */
OptimalSolution optimal_value(const Mdp& mdp);

}  // namespace hpi
