#include "hpi/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hpi {

void CounterexampleSpec::check() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("counterexample: gamma must lie in (0, 1)");
    if (h <= 1) throw ConfigError("counterexample: h must be greater than 1");
}

Counterexample build_counterexample(const CounterexampleSpec& spec) {
    using namespace counterexample;
    spec.check();
    const double g = spec.gamma;
    const double pad = -10.0 / (1.0 - g);
    constexpr int n = kStates;
    constexpr int na = kActions;

    std::vector<double> p(n * na * n, 0.0);
    std::vector<double> r(n * na, pad);
    auto edge = [&](int s, int a, int next, double reward) {
        p[(s * na + a) * n + next] = 1.0;
        r[s * na + a] = reward;
    };
    // Unavailable actions: dominated self-loops.
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < na; ++a) p[(s * na + a) * n + s] = 1.0;
    }
    auto clear_row = [&](int s, int a) {
        for (int next = 0; next < n; ++next) p[(s * na + a) * n + next] = 0.0;
    };
    clear_row(S0, Right);
    edge(S0, Right, S1, (1.0 - std::pow(g, spec.h)) / (1.0 - g));
    clear_row(S0, Up);
    edge(S0, Up, S3, 1.0);
    edge(S1, Stay, S1, 0.0);
    clear_row(S1, Right);
    edge(S1, Right, S2, 0.0);
    edge(S2, Stay, S2, 0.0);
    edge(S3, Stay, S3, 1.0);

    const double reward_max = std::max(1.0, (1.0 - std::pow(g, spec.h)) / (1.0 - g));
    Counterexample out{Mdp(n, na, std::move(p), std::move(r), g, pad, reward_max),
                       ValueFunction::Zero(n), Policy(std::vector<int>{Right, Stay, Stay, Stay})};
    out.v(S1) = -1.0 / (1.0 - g);
    return out;
}

void GridWorldSpec::check() const {
    if (n < 2) throw ConfigError("gridworld: n must be at least 2");
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gridworld: gamma must lie in (0, 1)");
    if (!(noise_reward_range.first <= noise_reward_range.second)) {
        throw ConfigError("gridworld: empty reward range");
    }
}

GridWorld build_gridworld(const GridWorldSpec& spec) {
    spec.check();
    const int side = spec.n;
    const int n = side * side;
    constexpr int na = grid::kActions;
    std::mt19937_64 rng(spec.rng_seed);
    const int goal = std::uniform_int_distribution<int>(0, n - 1)(rng);
    std::uniform_real_distribution<double> noise(spec.noise_reward_range.first,
                                                 spec.noise_reward_range.second);
    std::vector<double> state_reward(n);
    for (int s = 0; s < n; ++s) {
        const double x = noise(rng);  // drawn for every state so the goal does not shift the stream
        state_reward[s] = s == goal ? spec.goal_reward : x;
    }

    std::vector<double> p(static_cast<std::size_t>(n) * na * n, 0.0);
    std::vector<double> r(static_cast<std::size_t>(n) * na);
    for (int s = 0; s < n; ++s) {
        const int row = s / side;
        const int col = s % side;
        for (int a = 0; a < na; ++a) {
            int nr = row;
            int nc = col;
            switch (a) {
                case grid::Up: nr = std::max(0, row - 1); break;
                case grid::Down: nr = std::min(side - 1, row + 1); break;
                case grid::Right: nc = std::min(side - 1, col + 1); break;
                case grid::Left: nc = std::max(0, col - 1); break;
                default: break;
            }
            p[(static_cast<std::size_t>(s) * na + a) * n + (nr * side + nc)] = 1.0;
            r[static_cast<std::size_t>(s) * na + a] = state_reward[s];
        }
    }
    const double lo = std::min(spec.noise_reward_range.first, spec.goal_reward);
    const double hi = std::max(spec.noise_reward_range.second, spec.goal_reward);
    return GridWorld{Mdp(n, na, std::move(p), std::move(r), spec.gamma, lo, hi), goal};
}

ValueFunction initial_value(int n_states, std::uint64_t rng_seed) {
    if (n_states < 0) throw std::invalid_argument("initial_value: negative size");
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    ValueFunction v(n_states);
    for (int s = 0; s < n_states; ++s) v(s) = normal(rng);
    return v;
}

Mdp build_random_mdp(const RandomMdpSpec& spec) {
    if (spec.n_states <= 0 || spec.n_actions <= 0) {
        throw ConfigError("random mdp: sizes must be positive");
    }
    const int n = spec.n_states;
    const int na = spec.n_actions;
    const int branching = spec.branching <= 0 ? n : std::min(n, spec.branching);
    std::mt19937_64 rng(spec.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> p(static_cast<std::size_t>(n) * na * n, 0.0);
    std::vector<double> r(static_cast<std::size_t>(n) * na);
    std::vector<int> states(n);
    for (int s = 0; s < n; ++s) {
        for (int a = 0; a < na; ++a) {
            double* row = p.data() + (static_cast<std::size_t>(s) * na + a) * n;
            std::iota(states.begin(), states.end(), 0);
            std::shuffle(states.begin(), states.end(), rng);
            double total = 0.0;
            for (int i = 0; i < branching; ++i) {
                const double w = unit(rng) + 1e-3;
                row[states[i]] = w;
                total += w;
            }
            for (int next = 0; next < n; ++next) row[next] /= total;
            r[static_cast<std::size_t>(s) * na + a] = unit(rng);
        }
    }
    return Mdp(n, na, std::move(p), std::move(r), spec.gamma, 0.0, 1.0);
}

CountingSimulator::Sample CountingSimulator::query(int s, int a) {
    ++queries_;
    const auto succ = mdp_->successors(s, a);
    int next = succ.front().state;
    if (succ.size() > 1) {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
        for (const auto& [state, prob] : succ) {
            next = state;
            if ((u -= prob) < 0.0) break;
        }
    }
    return {mdp_->reward(s, a), next};
}

}  // namespace hpi
