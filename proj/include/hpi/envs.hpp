#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "hpi/mdp.hpp"

namespace hpi {

// Four-state counterexample on which the leaf-backed partial evaluations attain
// their worst-case error coefficient.

namespace counterexample {
enum State : int { S0 = 0, S1 = 1, S2 = 2, S3 = 3 };
enum Action : int { Stay = 0, Right = 1, Up = 2 };
inline constexpr int kStates = 4;
inline constexpr int kActions = 3;
}  // namespace counterexample

struct CounterexampleSpec {
    double gamma = 0.9;
    int h = 2;

    void check() const;
};

struct Counterexample {
    Mdp mdp;
    ValueFunction v;  ///< v(s0) = v(s2) = v(s3) = 0, v(s1) = -1/(1-gamma)
    Policy pi_h;      ///< {s0: right, s1: stay, s2: stay, s3: stay}
};

/**
 * s0 --right--> s1 with reward (1-gamma^h)/(1-gamma), s0 --up--> s3 with
 * reward 1, s1 loops (stay) or moves right to s2 with reward 0, s2 loops with
 * reward 0, s3 loops with reward 1.
 *
 * The action set is padded to {stay, right, up} everywhere; actions a state
 * does not have are self-loops with reward -10/(1-gamma), dominated by every
 * real action. The returned pi_h breaks the s0 tie towards 'right'.
 */
Counterexample build_counterexample(const CounterexampleSpec& spec);

namespace grid {
enum Action : int { Up = 0, Down = 1, Right = 2, Left = 3, Stay = 4 };
inline constexpr int kActions = 5;
}  // namespace grid

struct GridWorldSpec {
    int n = 10;
    double gamma = 0.97;
    double goal_reward = 1.0;
    std::pair<double, double> noise_reward_range{-0.1, 0.1};
    std::uint64_t rng_seed = 0;

    void check() const;
};

struct GridWorld {
    Mdp mdp;
    int goal_state = 0;
};

/// Deterministic N x N grid; state = row * N + col, row 0 at the top. Moves
/// into a wall leave the agent in place. Rewards depend on the state only.
GridWorld build_gridworld(const GridWorldSpec& spec);

/// i.i.d. N(0, 1) entries.
ValueFunction initial_value(int n_states, std::uint64_t rng_seed);

struct RandomMdpSpec {
    int n_states = 5;
    int n_actions = 3;
    double gamma = 0.9;
    /// Nonzero successors per (s, a); 0 means every state.
    int branching = 0;
    std::uint64_t rng_seed = 0;
};

/// Random transition rows and rewards in [0, 1] (r_min = 0, r_max = 1).
Mdp build_random_mdp(const RandomMdpSpec& spec);

/**
 * Query-counting facade over an Mdp. Each query() is one simulator call:
 * it returns the reward and a next state sampled from P(.|s, a) (the unique
 * successor for deterministic models).
 */
class CountingSimulator {
public:
    struct Sample {
        double reward;
        int next_state;
    };

    explicit CountingSimulator(const Mdp& mdp, std::uint64_t rng_seed = 0)
        : mdp_(&mdp), rng_(rng_seed) {}

    Sample query(int s, int a);
    std::uint64_t queries() const { return queries_; }
    void reset_count() { queries_ = 0; }
    const Mdp& mdp() const { return *mdp_; }

private:
    const Mdp* mdp_;
    std::mt19937_64 rng_;
    std::uint64_t queries_ = 0;
};

}  // namespace hpi
