#include "hpi/verify.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "hpi/algorithms.hpp"
#include "hpi/bellman.hpp"
#include "hpi/consistency.hpp"
#include "hpi/envs.hpp"
#include "hpi/h_greedy.hpp"

namespace hpi {

namespace {

class Suite {
public:
    explicit Suite(std::string name) { result_.name = std::move(name); }

    void check(bool ok, const std::string& what) {
        ++result_.total;
        if (ok) {
            ++result_.passed;
        } else {
            result_.failures.push_back(what);
        }
    }

    // Runs `body`, counting an exception as a failed check.
    template <typename F>
    void guarded(const std::string& what, F&& body) {
        try {
            body();
        } catch (const std::exception& e) {
            check(false, what + ": " + e.what());
        }
    }

    SuiteResult take() { return std::move(result_); }

private:
    SuiteResult result_;
};

struct Instance {
    std::uint64_t seed;
    Mdp mdp;
};

Instance make_instance(std::uint64_t seed) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + 17);
    RandomMdpSpec spec;
    spec.n_states = 2 + static_cast<int>(rng() % 7);
    spec.n_actions = 2 + static_cast<int>(rng() % 3);
    spec.gamma = std::uniform_real_distribution<double>(0.8, 0.99)(rng);
    spec.branching = (rng() % 2) ? 0 : 2;
    spec.rng_seed = rng();
    return {seed, build_random_mdp(spec)};
}

ValueFunction random_vector(int n, std::mt19937_64& rng, double scale = 5.0) {
    std::normal_distribution<double> normal(0.0, scale);
    ValueFunction v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

Policy random_policy(const Mdp& mdp, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, mdp.n_actions() - 1);
    std::vector<int> a(mdp.n_states());
    for (auto& x : a) x = pick(rng);
    return Policy(std::move(a));
}

std::string tag(const std::string& what, std::uint64_t seed) {
    std::ostringstream out;
    out << what << " [seed " << seed << ']';
    return out.str();
}

bool enumerable(const Mdp& mdp, std::uint64_t limit) {
    std::uint64_t count = 1;
    for (int s = 0; s < mdp.n_states(); ++s) {
        count *= static_cast<std::uint64_t>(mdp.n_actions());
        if (count > limit) return false;
    }
    return true;
}

// Calls f(policy) for every deterministic policy.
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

SuiteResult mdp_core_suite(const std::vector<Instance>& instances, const std::vector<Mdp>& extra) {
    Suite suite("mdp_core");
    for (std::size_t i = 0; i < extra.size(); ++i) {
        const auto report = validate(extra[i]);
        suite.check(report.ok(), "extra model " + std::to_string(i) + ": " + report.summary());
    }
    for (const auto& [seed, mdp] : instances) {
        suite.guarded(tag("mdp_core", seed), [&, seed = seed, &mdp = mdp] {
            std::mt19937_64 rng(seed);
            suite.check(validate(mdp).ok(), tag("random model validates", seed));
            const Policy pi = random_policy(mdp, rng);
            const ValueFunction v_pi = evaluate_policy_exact(mdp, pi);
            suite.check(max_norm(apply_t_pi(mdp, pi, v_pi) - v_pi) <= 1e-10,
                        tag("v^pi is the fixed point of T^pi", seed));
            const auto opt = optimal_value(mdp);
            bool dominates = true;
            for (int j = 0; j < 5; ++j) {
                const Policy other = random_policy(mdp, rng);
                dominates &= ((evaluate_policy_exact(mdp, other) - opt.value).maxCoeff() <= 1e-10);
            }
            suite.check(dominates, tag("v* dominates v^pi", seed));
            suite.check(max_norm(evaluate_policy_exact(mdp, opt.policy) - opt.value) <= 1e-10,
                        tag("greedy policy of v* reproduces v*", seed));
            if (enumerable(mdp, 4096)) {
                suite.check(max_norm(enumerate_optimal_value(mdp) - opt.value) <= 1e-10,
                            tag("v* matches policy enumeration", seed));
            }
        });
    }
    return suite.take();
}

SuiteResult bellman_suite(const std::vector<Instance>& instances) {
    Suite suite("bellman");
    for (const auto& [seed, mdp] : instances) {
        suite.guarded(tag("bellman", seed), [&, seed = seed, &mdp = mdp] {
            std::mt19937_64 rng(seed + 1);
            const int n = mdp.n_states();
            const double g = mdp.gamma();
            const Policy pi = random_policy(mdp, rng);
            const ValueFunction v = random_vector(n, rng);
            const ValueFunction u = random_vector(n, rng);
            const double d = max_norm(v - u);
            suite.check(max_norm(apply_t_pi(mdp, pi, v) - apply_t_pi(mdp, pi, u)) <= g * d + 1e-12,
                        tag("T^pi is a gamma-contraction", seed));
            suite.check(max_norm(apply_t_opt(mdp, v) - apply_t_opt(mdp, u)) <= g * d + 1e-12,
                        tag("T is a gamma-contraction", seed));

            const ValueFunction lo = v.cwiseMin(u);
            const ValueFunction hi = v.cwiseMax(u);
            suite.check((apply_t_pi(mdp, pi, lo) - apply_t_pi(mdp, pi, hi)).maxCoeff() <= 1e-12 &&
                            (apply_t_opt(mdp, lo) - apply_t_opt(mdp, hi)).maxCoeff() <= 1e-12,
                        tag("monotonicity", seed));

            // Affinity under convex combinations.
            const int k = 2 + static_cast<int>(rng() % 7);
            std::vector<ValueFunction> vs;
            std::vector<double> w;
            double total = 0.0;
            for (int i = 0; i < k; ++i) {
                vs.push_back(random_vector(n, rng));
                w.push_back(std::uniform_real_distribution<double>(0.01, 1.0)(rng));
                total += w.back();
            }
            const int power = 1 + static_cast<int>(rng() % 4);
            ValueFunction mix = ValueFunction::Zero(n);
            ValueFunction mapped = ValueFunction::Zero(n);
            for (int i = 0; i < k; ++i) {
                mix += (w[i] / total) * vs[i];
                mapped += (w[i] / total) * m_return(mdp, pi, vs[i], power);
            }
            suite.check(max_norm(m_return(mdp, pi, mix, power) - mapped) <= 1e-10,
                        tag("affinity of (T^pi)^n", seed));

            const double alpha = std::normal_distribution<double>(0.0, 10.0)(rng);
            const ValueFunction shifted = v + ValueFunction::Constant(n, alpha);
            suite.check(max_norm(apply_t_opt(mdp, shifted) - apply_t_opt(mdp, v) -
                                 ValueFunction::Constant(n, g * alpha)) <= 1e-12 * std::max(1.0, std::abs(alpha)),
                        tag("T(v + a e) = Tv + gamma a e", seed));

            LambdaParams lp{std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1e-12};
            suite.check(max_norm(lambda_return(mdp, pi, v, lp) - lambda_return_series(mdp, pi, v, lp)) <= 1e-9,
                        tag("lambda-return closed form matches its series", seed));
            suite.check(max_norm(bar_lambda_return(mdp, pi, apply_t_pi(mdp, pi, v), lp) -
                                 lambda_return(mdp, pi, v, lp)) <= 1e-10,
                        tag("bar-lambda o T^pi = lambda-return", seed));
            suite.check(max_norm(lambda_return(mdp, pi, v, {0.0}) - apply_t_pi(mdp, pi, v)) == 0.0 &&
                            max_norm(lambda_return(mdp, pi, v, {1.0}) - evaluate_policy_exact(mdp, pi)) <= 1e-10,
                        tag("lambda-return endpoints", seed));
        });
    }
    return suite.take();
}

SuiteResult h_greedy_suite(const std::vector<Instance>& instances) {
    Suite suite("h_greedy");
    for (const auto& [seed, mdp] : instances) {
        suite.guarded(tag("h_greedy", seed), [&, seed = seed, &mdp = mdp] {
            std::mt19937_64 rng(seed + 2);
            const int n = mdp.n_states();
            const ValueFunction v = random_vector(n, rng);
            const int h = 1 + static_cast<int>(rng() % 4);
            const auto backup = tree_backup(mdp, v, h);
            suite.check(max_norm(backup.root_value - apply_t_opt_n(mdp, v, h)) <= 1e-12 * std::max(1.0, max_norm(backup.root_value)),
                        tag("root value equals T^h v", seed));
            suite.check(is_in_h_greedy_set(mdp, v, backup.policy, h), tag("tree policy is h-greedy", seed));

            const auto noisy = approx_tree_backup(mdp, v, h, GreedyNoise{0.1, seed, (seed % 2) == 1});
            const ValueFunction exact_root = apply_t_opt_n(mdp, v, h);
            const ValueFunction achieved = apply_t_pi(mdp, noisy.policy, noisy.backed_value);
            suite.check(((exact_root - noisy.delta_drawn) - achieved).maxCoeff() <= 1e-12,
                        tag("approximate backup respects its allowance", seed));

            if (enumerable(mdp, 512)) {
                const double alpha = std::normal_distribution<double>(0.0, 10.0)(rng);
                const ValueFunction vs = v + ValueFunction::Constant(n, alpha);
                bool same = true;
                for_each_policy(mdp, [&](const Policy& pi) {
                    same &= is_in_h_greedy_set(mdp, v, pi, h) == is_in_h_greedy_set(mdp, vs, pi, h);
                });
                suite.check(same, tag("h-greedy set is shift invariant", seed));
            }
        });
    }
    return suite.take();
}

SuiteResult consistency_suite(const std::vector<Instance>& instances) {
    Suite suite("consistency");
    for (const auto& [seed, mdp] : instances) {
        suite.guarded(tag("consistency", seed), [&, seed = seed, &mdp = mdp] {
            std::mt19937_64 rng(seed + 3);
            const int n = mdp.n_states();
            const int h = 1 + static_cast<int>(rng() % 3);
            const ValueFunction v = random_vector(n, rng);
            const Policy pi = random_policy(mdp, rng);
            const auto report = check_consistency(mdp, v, pi, h);
            const ValueFunction shifted = shift_to_consistent(mdp, v, pi, h);
            suite.check(check_consistency(mdp, shifted, pi, h).consistent,
                        tag("shift_to_consistent yields a consistent pair", seed));
            suite.check(delta0(mdp, v, pi, h) == report.shift_delta && (report.shift_delta == 0.0) == (report.max_violation == 0.0),
                        tag("delta0 equals the shift constant", seed));

            const ValueFunction pessimistic = ValueFunction::Constant(n, mdp.r_min() / (1.0 - mdp.gamma()));
            const auto backup = tree_backup(mdp, pessimistic, h);
            suite.check(check_consistency(mdp, pessimistic, backup.policy, h).consistent,
                        tag("R_min/(1-gamma) initialization is consistent", seed));
            suite.check(verify_monotone_chain(mdp, pessimistic, backup.policy, h, 20),
                        tag("monotone partial-evaluation chain", seed));
            const Policy tree_pi = tree_backup(mdp, v, h).policy;
            const ValueFunction sv = shift_to_consistent(mdp, v, tree_pi, h);
            suite.check(verify_monotone_chain(mdp, sv, tree_pi, h, 20),
                        tag("monotone chain after shifting", seed));
            const LambdaParams lp{0.7};
            suite.check((lambda_return(mdp, tree_pi, apply_t_opt_n(mdp, sv, h - 1), lp) -
                         evaluate_policy_exact(mdp, tree_pi)).maxCoeff() <= 1e-10,
                        tag("lambda-return stays below v^pi", seed));
        });
    }
    return suite.take();
}

SuiteResult algorithms_suite(const std::vector<Instance>& instances) {
    Suite suite("algorithms");
    for (const auto& [seed, mdp] : instances) {
        suite.guarded(tag("algorithms", seed), [&, seed = seed, &mdp = mdp] {
            std::mt19937_64 rng(seed + 4);
            const int n = mdp.n_states();
            const ValueFunction v_star = optimal_value(mdp).value;
            const ValueFunction v0 = random_vector(n, rng, 1.0);
            const int h = 1 + static_cast<int>(rng() % 3);

            AlgoConfig cfg;
            cfg.h = h;
            cfg.rng_seed = seed;
            cfg.stop.max_iterations = 20;
            cfg.scheme = Scheme::HM_PI;
            cfg.m = 3;
            const auto a = run(mdp, v_star, v0, cfg);
            cfg.scheme = Scheme::HM_PI_ROOT;
            const auto b = run(mdp, v_star, v0, cfg);
            cfg.scheme = Scheme::HLAMBDA_PI;
            cfg.m.reset();
            cfg.lambda = 0.6;
            const auto c = run(mdp, v_star, v0, cfg);
            cfg.scheme = Scheme::HLAMBDA_PI_ROOT;
            const auto d = run(mdp, v_star, v0, cfg);
            bool same = a.iterations.size() == b.iterations.size() && c.iterations.size() == d.iterations.size();
            for (std::size_t i = 0; same && i < a.iterations.size(); ++i) {
                same &= std::abs(a.iterations[i].dist_value - b.iterations[i].dist_value) <= 1e-10;
            }
            for (std::size_t i = 0; same && i < c.iterations.size(); ++i) {
                same &= std::abs(c.iterations[i].dist_value - d.iterations[i].dist_value) <= 1e-10;
            }
            same &= max_norm(a.final_value - b.final_value) <= 1e-10 &&
                    max_norm(c.final_value - d.final_value) <= 1e-10;
            suite.check(same, tag("root backup matches byproduct backup", seed));

            // Theorem-2 envelope, noiseless.
            const double d0 = max_norm(v_star - (v0 - ValueFunction::Constant(n, a.delta0)));
            bool envelope = true;
            for (std::size_t i = 0; i < a.iterations.size(); ++i) {
                envelope &= a.iterations[i].dist_policy_value <=
                            std::pow(mdp.gamma(), static_cast<double>(i) * h) * d0 + 1e-9;
            }
            suite.check(envelope, tag("noiseless convergence envelope", seed));

            const ValueFunction pessimistic = ValueFunction::Constant(n, mdp.r_min() / (1.0 - mdp.gamma()));
            const auto ratios = verify_gamma_h_contraction(mdp, v_star, pessimistic, h, 2, {0.5});
            const double bound = std::pow(mdp.gamma(), h) + 1e-10;
            suite.check(ratios.m_return <= bound && ratios.lambda_return <= bound,
                        tag("one-step gamma^h contraction", seed));
        });
    }
    return suite.take();
}

SuiteResult envs_suite(const std::vector<Instance>& instances) {
    Suite suite("envs");
    for (const auto& inst : instances) {
        const std::uint64_t seed = inst.seed;
        suite.guarded(tag("envs", seed), [&] {
            std::mt19937_64 rng(seed + 5);
            const double g = std::uniform_real_distribution<double>(0.5, 0.99)(rng);
            const int h = 2 + static_cast<int>(rng() % 4);
            const int m = 1 + static_cast<int>(rng() % 10);
            const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            const auto ce = build_counterexample({g, h});
            suite.check(validate(ce.mdp).ok(), tag("counterexample validates", seed));
            const ValueFunction v_star = optimal_value(ce.mdp).value;
            const double base = max_norm(v_star - ce.v);
            const double ratio_m = max_norm(v_star - m_return(ce.mdp, ce.pi_h, ce.v, m)) / base;
            const double ratio_l = max_norm(v_star - lambda_return(ce.mdp, ce.pi_h, ce.v, {lambda})) / base;
            suite.check(std::abs(ratio_m - (std::pow(g, m) + std::pow(g, h))) <= 1e-10,
                        tag("m-return tightness", seed));
            suite.check(std::abs(ratio_l - (std::pow(g, h) + g * (1 - lambda) / (1 - g * lambda))) <= 1e-10,
                        tag("lambda-return tightness", seed));
            const auto world = build_gridworld({2 + static_cast<int>(seed % 5), 0.97, 1.0, {-0.1, 0.1}, seed});
            suite.check(validate(world.mdp).ok(), tag("grid world validates", seed));
        });
    }
    return suite.take();
}

}  // namespace

ValueFunction enumerate_optimal_value(const Mdp& mdp, std::uint64_t limit) {
    if (!enumerable(mdp, limit)) {
        throw std::invalid_argument("enumerate_optimal_value: too many policies");
    }
    ValueFunction best = ValueFunction::Constant(mdp.n_states(), -std::numeric_limits<double>::infinity());
    for_each_policy(mdp, [&](const Policy& pi) { best = best.cwiseMax(evaluate_policy_exact(mdp, pi)); });
    return best;
}

std::vector<SuiteResult> run_verification(const VerifyOptions& options) {
    std::vector<Instance> instances;
    instances.reserve(options.seeds.size());
    for (auto seed : options.seeds) instances.push_back(make_instance(seed));
    return {mdp_core_suite(instances, options.extra_mdps), bellman_suite(instances),
            h_greedy_suite(instances),                    consistency_suite(instances),
            algorithms_suite(instances),                  envs_suite(instances)};
}

}  // namespace hpi
