#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "hpi/bellman.hpp"
#include "hpi/envs.hpp"

using namespace hpi;

TEST_CASE("T^pi and T against the dense oracle") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const Mdp mdp = oracle::random_mdp(seed);
        std::mt19937_64 rng(seed);
        const Policy pi = oracle::random_policy(mdp, rng);
        const auto v = oracle::random_value(mdp.n_states(), rng);
        const auto vv = oracle::to_vec(v);
        CHECK(oracle::max_abs_diff(oracle::to_vec(apply_t_pi(mdp, pi, v)), oracle::t_pi(mdp, pi.actions(), vv)) <= 1e-12);
        CHECK(oracle::max_abs_diff(oracle::to_vec(apply_t_opt(mdp, v)), oracle::t_opt(mdp, vv)) <= 1e-12);
        const auto q = q_values(mdp, v);
        CHECK(q.rows() == mdp.n_states());
        CHECK(q.cols() == mdp.n_actions());
        CHECK(std::abs(q(0, 0) - oracle::q(mdp, vv, 0, 0)) <= 1e-12);
    }
}

TEST_CASE("T^pi worked values") {
    SUBCASE("fixed point") {
        const Mdp mdp = build_random_mdp({5, 2, 0.9, 0, 3});
        const Policy pi = Policy::constant(5, 1);
        const auto v = evaluate_policy_exact(mdp, pi);
        CHECK(max_norm(apply_t_pi(mdp, pi, v) - v) <= 1e-10);
    }
    SUBCASE("counterexample stay at s1") {
        const double g = 0.9;
        const auto ce = build_counterexample({g, 2});
        const auto out = apply_t_pi(ce.mdp, ce.pi_h, ce.v);
        CHECK(std::abs(out(counterexample::S1) + g / (1.0 - g)) <= 1e-12);
    }
    SUBCASE("v = 0 gives r^pi exactly") {
        const Mdp mdp = build_random_mdp({5, 3, 0.8, 0, 4});
        const Policy pi(std::vector<int>{0, 1, 2, 1, 0});
        const auto out = apply_t_pi(mdp, pi, ValueFunction::Zero(5));
        for (int s = 0; s < 5; ++s) CHECK(out(s) == mdp.reward(s, pi[s]));
    }
    SUBCASE("rejects a mismatched value") {
        const Mdp mdp = build_random_mdp({3, 2, 0.8, 0, 4});
        CHECK_THROWS_AS(apply_t_pi(mdp, Policy::constant(3, 0), ValueFunction::Zero(4)), std::invalid_argument);
    }
}

TEST_CASE("T worked values") {
    const Mdp mdp = build_random_mdp({6, 3, 0.9, 0, 12});
    const auto v_star = optimal_value(mdp).value;
    CHECK(max_norm(apply_t_opt(mdp, v_star) - v_star) <= 1e-10);

    const auto ce = build_counterexample({0.9, 2});
    CHECK(apply_t_opt(ce.mdp, ce.v)(counterexample::S3) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(max_norm(apply_t_opt_n(mdp, v_star, 0) - v_star) == 0.0);
    CHECK_THROWS_AS(apply_t_opt_n(mdp, v_star, -1), std::invalid_argument);
}

TEST_CASE("greedy_policy") {
    SUBCASE("up at s0 under v*") {
        const auto ce = build_counterexample({0.97, 3});
        CHECK(greedy_policy(ce.mdp, optimal_value(ce.mdp).value)[0] == counterexample::Up);
    }
    SUBCASE("ties go to action 0") {
        const Mdp mdp(2, 3, std::vector<double>(12, 0.5), std::vector<double>(6, 1.0), 0.9);
        const auto pi = greedy_policy(mdp, ValueFunction::Constant(2, 4.0));
        CHECK(pi == Policy::constant(2, 0));
    }
    SUBCASE("T^greedy v == T v") {
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            const Mdp mdp = oracle::random_mdp(seed);
            std::mt19937_64 rng(seed);
            const auto v = oracle::random_value(mdp.n_states(), rng);
            CHECK(max_norm(apply_t_pi(mdp, greedy_policy(mdp, v), v) - apply_t_opt(mdp, v)) <= 1e-12);
        }
    }
}

TEST_CASE("m_return") {
    const Mdp mdp = build_random_mdp({6, 3, 0.9, 0, 21});
    std::mt19937_64 rng(2);
    const Policy pi = oracle::random_policy(mdp, rng);
    const auto v = oracle::random_value(6, rng);
    CHECK(max_norm(m_return(mdp, pi, v, 1) - apply_t_pi(mdp, pi, v)) == 0.0);
    CHECK(max_norm(m_return(mdp, pi, v, 0) - v) == 0.0);
    CHECK(max_norm(m_return(mdp, pi, v, 200) - evaluate_policy_exact(mdp, pi)) <= 1e-8);
    CHECK(max_norm(m_return(mdp, pi, v, 3) - apply_t_pi(mdp, pi, m_return(mdp, pi, v, 2))) <= 1e-12);
    CHECK_THROWS_AS(m_return(mdp, pi, v, -1), std::invalid_argument);

    SUBCASE("counterexample at s0") {
        for (double g : {0.9, 0.97}) {
            for (int h : {2, 3, 5}) {
                const auto ce = build_counterexample({g, h});
                for (int m : {1, 2, 5, 10}) {
                    const double expected = (1.0 - std::pow(g, m) - std::pow(g, h)) / (1.0 - g);
                    CHECK(std::abs(m_return(ce.mdp, ce.pi_h, ce.v, m)(0) - expected) <= 1e-10);
                }
            }
        }
    }
}

TEST_CASE("lambda_return") {
    const Mdp mdp = build_random_mdp({7, 3, 0.95, 3, 5});
    std::mt19937_64 rng(3);
    const Policy pi = oracle::random_policy(mdp, rng);
    const auto v = oracle::random_value(7, rng);

    CHECK(max_norm(lambda_return(mdp, pi, v, {0.0}) - apply_t_pi(mdp, pi, v)) == 0.0);
    CHECK(max_norm(lambda_return(mdp, pi, v, {1.0}) - evaluate_policy_exact(mdp, pi)) <= 1e-10);
    for (double lambda : {0.1, 0.5, 0.9, 0.99}) {
        const LambdaParams lp{lambda, 1e-12};
        CHECK(max_norm(lambda_return(mdp, pi, v, lp) - lambda_return_series(mdp, pi, v, lp)) <= 1e-9);
        CHECK(max_norm(bar_lambda_return(mdp, pi, v, lp) - bar_lambda_return_series(mdp, pi, v, lp)) <= 1e-9);
    }
    CHECK_THROWS_AS(lambda_return(mdp, pi, v, {1.5}), std::invalid_argument);
    CHECK_THROWS_AS(lambda_return(mdp, pi, v, {-0.1}), std::invalid_argument);

    SUBCASE("counterexample at s0") {
        for (double g : {0.9, 0.99}) {
            const int h = 3;
            const auto ce = build_counterexample({g, h});
            for (double lambda : {0.0, 0.3, 0.7, 0.95}) {
                const double expected = (1.0 - std::pow(g, h)) / (1.0 - g) -
                                        g * (1.0 - lambda) / ((1.0 - g * lambda) * (1.0 - g));
                CHECK(std::abs(lambda_return(ce.mdp, ce.pi_h, ce.v, {lambda})(0) - expected) <= 1e-10);
            }
        }
    }
}

TEST_CASE("bar_lambda_return") {
    const Mdp mdp = build_random_mdp({5, 2, 0.9, 0, 6});
    std::mt19937_64 rng(4);
    const Policy pi = oracle::random_policy(mdp, rng);
    const auto v = oracle::random_value(5, rng);
    CHECK(max_norm(bar_lambda_return(mdp, pi, v, {0.0}) - v) == 0.0);
    CHECK(max_norm(bar_lambda_return(mdp, pi, v, {1.0}) - evaluate_policy_exact(mdp, pi)) <= 1e-10);

    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Mdp m = oracle::random_mdp(seed + 500);
        std::mt19937_64 r(seed);
        const Policy p = oracle::random_policy(m, r);
        const auto u = oracle::random_value(m.n_states(), r);
        const LambdaParams lp{std::uniform_real_distribution<double>(0.0, 1.0)(r)};
        worst = std::max(worst, max_norm(bar_lambda_return(m, p, apply_t_pi(m, p, u), lp) - lambda_return(m, p, u, lp)));
    }
    CHECK(worst <= 1e-10);
}
