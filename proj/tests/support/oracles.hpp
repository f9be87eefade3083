#pragma once

// Reference implementations for tests. Deliberately naive: dense loops over
// Mdp::transition, no Eigen solvers, no shared code with the library paths.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "hpi/envs.hpp"
#include "hpi/mdp.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec to_vec(const hpi::ValueFunction& v) { return Vec(v.data(), v.data() + v.size()); }

inline hpi::ValueFunction to_value(const Vec& v) {
    hpi::ValueFunction out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = v[i];
    return out;
}

inline double q(const hpi::Mdp& mdp, const Vec& v, int s, int a) {
    double acc = 0.0;
    for (int next = 0; next < mdp.n_states(); ++next) acc += mdp.transition(s, a, next) * v[next];
    return mdp.reward(s, a) + mdp.gamma() * acc;
}

inline Vec t_pi(const hpi::Mdp& mdp, const std::vector<int>& pi, const Vec& v) {
    Vec out(v.size());
    for (int s = 0; s < mdp.n_states(); ++s) out[s] = q(mdp, v, s, pi[s]);
    return out;
}

inline Vec t_opt(const hpi::Mdp& mdp, const Vec& v) {
    Vec out(v.size());
    for (int s = 0; s < mdp.n_states(); ++s) {
        double best = -INFINITY;
        for (int a = 0; a < mdp.n_actions(); ++a) best = std::max(best, q(mdp, v, s, a));
        out[s] = best;
    }
    return out;
}

/// Gaussian elimination with partial pivoting; solves A x = b in place.
inline Vec solve(std::vector<Vec> a, Vec b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        if (a[col][col] == 0.0) throw std::runtime_error("oracle::solve: singular");
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    Vec x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

/// v^pi from (I - gamma P^pi) v = r^pi.
inline Vec policy_value(const hpi::Mdp& mdp, const std::vector<int>& pi) {
    const int n = mdp.n_states();
    std::vector<Vec> a(n, Vec(n, 0.0));
    Vec b(n);
    for (int s = 0; s < n; ++s) {
        for (int next = 0; next < n; ++next) {
            a[s][next] = (s == next ? 1.0 : 0.0) - mdp.gamma() * mdp.transition(s, pi[s], next);
        }
        b[s] = mdp.reward(s, pi[s]);
    }
    return solve(std::move(a), std::move(b));
}

/// Componentwise max over all |A|^|S| deterministic policies.
inline Vec enumerate_optimal(const hpi::Mdp& mdp) {
    const int n = mdp.n_states();
    std::vector<int> pi(n, 0);
    Vec best(n, -INFINITY);
    for (;;) {
        const Vec v = policy_value(mdp, pi);
        for (int s = 0; s < n; ++s) best[s] = std::max(best[s], v[s]);
        int s = 0;
        while (s < n && ++pi[s] == mdp.n_actions()) pi[s++] = 0;
        if (s == n) return best;
    }
}

/// Value iteration stopped by the tail bound gamma/(1-gamma) ||Tv - v|| <= tol.
inline Vec value_iteration(const hpi::Mdp& mdp, double tol) {
    Vec v(mdp.n_states(), 0.0);
    const double g = mdp.gamma();
    for (int it = 0; it < 1000000; ++it) {
        const Vec next = t_opt(mdp, v);
        double diff = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) diff = std::max(diff, std::abs(next[i] - v[i]));
        v = next;
        if (g / (1.0 - g) * diff <= tol) return v;
    }
    throw std::runtime_error("oracle::value_iteration: no convergence");
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

inline std::uint64_t policy_count(const hpi::Mdp& mdp) {
    std::uint64_t c = 1;
    for (int s = 0; s < mdp.n_states(); ++s) c *= static_cast<std::uint64_t>(mdp.n_actions());
    return c;
}

// Seeded generators shared by the tests.

inline hpi::Mdp random_mdp(std::uint64_t seed, int max_states = 8, int max_actions = 4) {
    std::mt19937_64 rng(seed * 7919 + 3);
    hpi::RandomMdpSpec spec;
    spec.n_states = std::uniform_int_distribution<int>(1, max_states)(rng);
    spec.n_actions = std::uniform_int_distribution<int>(1, max_actions)(rng);
    spec.gamma = std::uniform_real_distribution<double>(0.5, 0.99)(rng);
    spec.branching = static_cast<int>(rng() % 3);
    spec.rng_seed = rng();
    return hpi::build_random_mdp(spec);
}

inline hpi::ValueFunction random_value(int n, std::mt19937_64& rng, double scale = 3.0) {
    std::normal_distribution<double> d(0.0, scale);
    hpi::ValueFunction v(n);
    for (int i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

inline hpi::Policy random_policy(const hpi::Mdp& mdp, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> d(0, mdp.n_actions() - 1);
    std::vector<int> a(mdp.n_states());
    for (auto& x : a) x = d(rng);
    return hpi::Policy(a);
}

}  // namespace oracle
