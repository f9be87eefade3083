// Randomised invariants over many seeded instances.

#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "hpi/algorithms.hpp"
#include "hpi/bellman.hpp"
#include "hpi/consistency.hpp"
#include "hpi/envs.hpp"
#include "hpi/h_greedy.hpp"

using namespace hpi;

namespace {

constexpr int kSeeds = 200;

ValueFunction pessimistic(const Mdp& mdp) {
    return ValueFunction::Constant(mdp.n_states(), mdp.r_min() / (1.0 - mdp.gamma()));
}

template <typename F>
void for_each_policy(const Mdp& mdp, F&& f) {
    std::vector<int> a(mdp.n_states(), 0);
    for (;;) {
        f(Policy(a));
        int s = 0;
        while (s < mdp.n_states() && ++a[s] == mdp.n_actions()) a[s++] = 0;
        if (s == mdp.n_states()) return;
    }
}

}  // namespace

TEST_CASE("operator algebra") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        const Mdp mdp = oracle::random_mdp(seed);
        std::mt19937_64 rng(seed);
        const int n = mdp.n_states();
        const double g = mdp.gamma();
        const Policy pi = oracle::random_policy(mdp, rng);
        const auto v = oracle::random_value(n, rng);
        const auto u = oracle::random_value(n, rng);
        const double d = max_norm(v - u);

        CHECK(max_norm(apply_t_pi(mdp, pi, v) - apply_t_pi(mdp, pi, u)) <= g * d + 1e-12);
        CHECK(max_norm(apply_t_opt(mdp, v) - apply_t_opt(mdp, u)) <= g * d + 1e-12);

        const auto lo = v.cwiseMin(u);
        const auto hi = v.cwiseMax(u);
        CHECK((apply_t_pi(mdp, pi, lo) - apply_t_pi(mdp, pi, hi)).maxCoeff() <= 1e-12);
        CHECK((apply_t_opt(mdp, lo) - apply_t_opt(mdp, hi)).maxCoeff() <= 1e-12);

        const double alpha = std::normal_distribution<double>(0.0, 20.0)(rng);
        const auto e = ValueFunction::Constant(n, alpha);
        CHECK(max_norm(apply_t_opt(mdp, v + e) - apply_t_opt(mdp, v) - g * e) <= 1e-12 * std::max(1.0, std::abs(alpha)));

        // Affinity under convex combinations of up to 8 functions, powers up to 4.
        const int k = 1 + static_cast<int>(rng() % 8);
        const int power = 1 + static_cast<int>(rng() % 4);
        std::vector<double> w(k);
        double total = 0.0;
        for (auto& x : w) total += (x = std::uniform_real_distribution<double>(0.0, 1.0)(rng) + 1e-3);
        ValueFunction mix = ValueFunction::Zero(n);
        ValueFunction mapped = ValueFunction::Zero(n);
        for (int i = 0; i < k; ++i) {
            const auto vi = oracle::random_value(n, rng);
            mix += (w[i] / total) * vi;
            mapped += (w[i] / total) * m_return(mdp, pi, vi, power);
        }
        CHECK(max_norm(m_return(mdp, pi, mix, power) - mapped) <= 1e-10);

        const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        CHECK(max_norm(bar_lambda_return(mdp, pi, apply_t_pi(mdp, pi, v), {lambda}) - lambda_return(mdp, pi, v, {lambda})) <= 1e-10);
        const int m = 1 + static_cast<int>(rng() % 6);
        CHECK(max_norm(m_return(mdp, pi, apply_t_pi(mdp, pi, v), m - 1) - m_return(mdp, pi, v, m)) <= 1e-12 * std::max(1.0, max_norm(v)));
    }
}

TEST_CASE("h-greedy set is invariant to constant shifts") {
    int checked = 0;
    for (std::uint64_t seed = 0; seed < kSeeds && checked < 40; ++seed) {
        const Mdp mdp = oracle::random_mdp(seed, 5, 3);
        if (oracle::policy_count(mdp) > 243) continue;
        ++checked;
        std::mt19937_64 rng(seed);
        const auto v = oracle::random_value(mdp.n_states(), rng);
        const auto shifted = v + ValueFunction::Constant(mdp.n_states(), std::normal_distribution<double>(0, 10)(rng));
        const int h = 1 + static_cast<int>(seed % 3);
        int accepted = 0;
        for_each_policy(mdp, [&](const Policy& pi) {
            const bool a = is_in_h_greedy_set(mdp, v, pi, h);
            CHECK(a == is_in_h_greedy_set(mdp, shifted, pi, h));
            accepted += a;
        });
        CHECK(accepted >= 1);
    }
    CHECK(checked == 40);
}

TEST_CASE("consistency invariants") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        const Mdp mdp = oracle::random_mdp(seed + 1000);
        std::mt19937_64 rng(seed);
        const int h = 1 + static_cast<int>(seed % 4);
        const auto v = oracle::random_value(mdp.n_states(), rng, 5.0);
        const Policy pi = oracle::random_policy(mdp, rng);
        const Policy copy = pi;
        const auto shifted = shift_to_consistent(mdp, v, pi, h);
        CHECK(pi == copy);
        CHECK(check_consistency(mdp, shifted, pi, h).consistent);
        CHECK((delta0(mdp, v, pi, h) == 0.0) == check_consistency(mdp, v, pi, h).consistent);
        const auto tree_pi = tree_backup(mdp, shifted, h).policy;
        const auto sv = shift_to_consistent(mdp, shifted, tree_pi, h);
        CHECK(verify_monotone_chain(mdp, sv, tree_pi, h, 20));
    }
}

TEST_CASE("non-contracting updates respect their one-step bounds on consistent pairs") {
    for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
        const Mdp mdp = oracle::random_mdp(seed + 2000, 10, 4);
        std::mt19937_64 rng(seed);
        const double g = mdp.gamma();
        const int h = 1 + static_cast<int>(seed % 4);
        const int m = 1 + static_cast<int>(rng() % 5);
        const double lambda = std::uniform_real_distribution<double>(0.0, 0.99)(rng);
        const auto raw = oracle::random_value(mdp.n_states(), rng);
        const auto pi = tree_backup(mdp, raw, h).policy;
        const auto v = shift_to_consistent(mdp, raw, pi, h);
        if (!is_in_h_greedy_set(mdp, v, pi, h)) continue;
        const auto v_star = optimal_value(mdp).value;
        const double base = max_norm(v_star - v);
        if (base < 1e-9) continue;
        CHECK(max_norm(v_star - m_return(mdp, pi, v, m)) / base <= std::pow(g, m) + std::pow(g, h) + 1e-10);
        CHECK(max_norm(v_star - lambda_return(mdp, pi, v, {lambda})) / base <=
              g * (1 - lambda) / (1 - lambda * g) + std::pow(g, h) + 1e-10);
    }
}

TEST_CASE("noiseless contracting schemes") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Mdp mdp = oracle::random_mdp(seed + 3000, 10, 4);
        const double g = mdp.gamma();
        const auto v_star = optimal_value(mdp).value;
        for (Scheme scheme : {Scheme::HM_PI, Scheme::HLAMBDA_PI}) {
            AlgoConfig cfg;
            cfg.scheme = scheme;
            cfg.h = 1 + static_cast<int>(seed % 3);
            if (scheme == Scheme::HM_PI) cfg.m = 2;
            else cfg.lambda = 0.5;
            cfg.stop.max_iterations = 60;
            const auto r = run(mdp, v_star, pessimistic(mdp), cfg);
            double prev = r.initial_dist_value;
            std::uint64_t queries = 0;
            for (const auto& rec : r.iterations) {
                CHECK(rec.dist_policy_value <= std::pow(g, cfg.h) * prev + 1e-9);
                CHECK(rec.dist_value <= std::pow(g, cfg.h) * prev + 1e-9);
                CHECK(rec.queries_this_iter > 0);
                queries += rec.queries_this_iter;
                prev = rec.dist_value;
            }
            CHECK(queries == r.total_queries);
        }
    }
}

TEST_CASE("noisy contracting schemes stay inside the error envelope") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Mdp mdp = oracle::random_mdp(seed + 4000, 10, 4);
        const double g = mdp.gamma();
        const auto v_star = optimal_value(mdp).value;
        const auto v0 = initial_value(mdp.n_states(), seed);
        for (Scheme scheme : {Scheme::HM_PI, Scheme::HLAMBDA_PI}) {
            AlgoConfig cfg;
            cfg.scheme = scheme;
            cfg.h = 1 + static_cast<int>(seed % 3);
            if (scheme == Scheme::HM_PI) cfg.m = 1 + static_cast<int>(seed % 4);
            else cfg.lambda = 0.3;
            cfg.eval_noise_bound = 0.2;
            cfg.greedy_noise_bound = 0.1;
            cfg.adversarial_greedy = true;
            cfg.rng_seed = seed;
            cfg.stop.max_iterations = 80;
            const auto r = run(mdp, v_star, v0, cfg);
            const double gh = std::pow(g, cfg.h);
            const double d0 = max_norm(v_star - (v0 - ValueFunction::Constant(mdp.n_states(), r.delta0)));
            const double plateau = (2 * gh * cfg.eval_noise_bound + cfg.greedy_noise_bound) / ((1 - g) * (1 - gh));
            for (std::size_t k = 0; k < r.iterations.size(); ++k) {
                const double decay = std::pow(gh, static_cast<double>(k));
                CHECK(r.iterations[k].dist_policy_value <= decay * d0 + plateau * (1 - decay) + 1e-9);
            }
        }
    }
}
