#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hpi/experiments.hpp"
#include "hpi/io.hpp"

using namespace hpi;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("hpi_test_" + name);
}

}  // namespace

TEST_CASE("config resolution") {
    SUBCASE("defaults") {
        const auto cfg = resolve_config(ExperimentKind::Tightness, json());
        CHECK(cfg.gammas == std::vector<double>{0.9, 0.97, 0.99});
        CHECK(cfg.hs == std::vector<int>{2, 3, 5});
        CHECK(resolve_config(ExperimentKind::Verify, json()).seeds.size() == 20);
        const auto sweep = resolve_config(ExperimentKind::SweepNoisy, json());
        CHECK(sweep.eps_bound == 0.3);
        CHECK(sweep.query_budget == 4000000);
        CHECK(sweep.hs.size() == 8);
        CHECK(sweep.ms.size() == 30);
    }
    SUBCASE("file values and assignments") {
        const auto cfg = resolve_config(ExperimentKind::SweepNoiseless, json{{"h", {1, 2}}, {"grid", {{"n", 4}}}},
                                        {"m=[3]", "seed_count=3", "grid.gamma=0.9"});
        CHECK(cfg.hs == std::vector<int>{1, 2});
        CHECK(cfg.ms == std::vector<int>{3});
        CHECK(cfg.seeds == std::vector<std::uint64_t>{0, 1, 2});
        CHECK(cfg.grid.n == 4);
        CHECK(cfg.grid.gamma == 0.9);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(resolve_config(ExperimentKind::Verify, json{{"seeds", json::array()}}), ConfigError);
        CHECK_THROWS_AS(resolve_config(ExperimentKind::Verify, json(), {"seed_count=0"}), ConfigError);
        CHECK_THROWS_AS(resolve_config(ExperimentKind::Verify, json{{"bogus", 1}}), ConfigError);
        CHECK_THROWS_AS(resolve_config(ExperimentKind::Verify, json(), {"grid.size=3"}), ConfigError);
        CHECK_THROWS_AS(resolve_config(ExperimentKind::Verify, json(), {"noequals"}), ConfigError);
        CHECK_THROWS_AS(resolve_config(ExperimentKind::Tightness, json(), {"h=\"x\""}), ConfigError);
        CHECK_THROWS_AS(resolve_config(ExperimentKind::Tightness, json{{"experiment", "verify"}}), ConfigError);
        CHECK_THROWS_AS(resolve_config(ExperimentKind::SweepNoiseless, json(), {"schemes=[\"HX\"]"}), ConfigError);
    }
}

TEST_CASE("config hash") {
    const auto a = resolve_config(ExperimentKind::Contraction, json());
    auto b = resolve_config(ExperimentKind::Contraction, json(), {"jobs=4", "output=\"/tmp/x.csv\""});
    const auto c = resolve_config(ExperimentKind::Contraction, json(), {"h=[1]"});
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a) != config_hash(c));
    CHECK(config_hash(a).size() == 16);
    // seed_count expands to the same seeds as an explicit list.
    const auto d = resolve_config(ExperimentKind::Verify, json(), {"seed_count=3"});
    const auto e = resolve_config(ExperimentKind::Verify, json(), {"seeds=[0,1,2]"});
    CHECK(config_hash(d) == config_hash(e));
}

TEST_CASE("random_instance stays in range") {
    RandomInstanceRange range;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Mdp mdp = random_instance(range, seed);
        CHECK(mdp.n_states() >= 2);
        CHECK(mdp.n_states() <= 10);
        CHECK(mdp.n_actions() >= 2);
        CHECK(mdp.n_actions() <= 4);
        CHECK(mdp.gamma() >= 0.8);
        CHECK(mdp.gamma() <= 0.99);
        CHECK(validate(mdp).ok());
    }
    range.max_states = 1;
    CHECK_THROWS_AS(random_instance(range, 0), ConfigError);
}

TEST_CASE("tightness command") {
    std::ostringstream log;
    const auto out = temp_path("tight.csv");
    auto cfg = resolve_config(ExperimentKind::Tightness, json(), {"output=" + json(out.string()).dump()});
    CHECK(cmd_tightness(cfg, log) == 0);
    const auto text = slurp(out);
    CHECK(text.rfind("gamma,h,kind,param,measured,predicted,abs_error,config_hash\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 3 * (4 + 4));
    CHECK(text.find(config_hash(cfg)) != std::string::npos);
    std::filesystem::remove(out);

    auto bad = resolve_config(ExperimentKind::Tightness, json(), {"h=[1,2]"});
    CHECK_THROWS_AS(cmd_tightness(bad, log), ConfigError);
}

TEST_CASE("sweep is deterministic across job counts") {
    const std::vector<std::string> base{"h=[1,2]", "m=[1,3]", "seed_count=2", "grid.n=4"};
    auto one = base;
    one.push_back("jobs=1");
    auto three = base;
    three.push_back("jobs=3");
    const auto a = run_sweep(resolve_config(ExperimentKind::SweepNoiseless, json(), one));
    const auto b = run_sweep(resolve_config(ExperimentKind::SweepNoiseless, json(), three));
    REQUIRE(a.size() == 16);
    REQUIRE(b.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].scheme == b[i].scheme);
        CHECK(a[i].queries == b[i].queries);
        CHECK(a[i].final_dist == b[i].final_dist);
        CHECK(a[i].stop_reason == StopReason::Converged);
    }
    // Sorted by (scheme, h, m, seed).
    for (std::size_t i = 1; i < a.size(); ++i) {
        CHECK(std::tie(a[i - 1].scheme, a[i - 1].h, a[i - 1].m, a[i - 1].seed) <
              std::tie(a[i].scheme, a[i].h, a[i].m, a[i].seed));
    }
    // At h = 1 both schemes are the same algorithm.
    for (const auto& r : a) {
        if (r.h != 1 || r.scheme != Scheme::HM_PI) continue;
        for (const auto& o : a) {
            if (o.scheme == Scheme::NC_HM_PI && o.h == 1 && o.m == r.m && o.seed == r.seed) CHECK(o.queries == r.queries);
        }
    }
}

TEST_CASE("sweep CSV files") {
    const auto out = temp_path("sweep.csv");
    std::ostringstream log;
    const auto cfg = resolve_config(ExperimentKind::SweepNoisy, json(),
                                    {"h=[1,2]", "m=[1]", "seed_count=3", "grid.n=4", "query_budget=20000",
                                     "output=" + json(out.string()).dump()});
    REQUIRE(cmd_sweep(cfg, log) == 0);
    const auto text = slurp(out);
    CHECK(text.rfind("scheme,h,m,seed,queries,iterations,final_dist,eps_bound,delta_bound,final_policy_dist,"
                     "stop_reason,config_hash\n",
                     0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 2 * 2 * 3);
    const auto stats = slurp(out.string() + ".stats.csv");
    CHECK(std::count(stats.begin(), stats.end(), '\n') == 1 + 2 * 2);
    CHECK(cmd_sweep(cfg, log) == 0);
    CHECK(slurp(out) == text);
    std::filesystem::remove(out);
    std::filesystem::remove(out.string() + ".stats.csv");
}

TEST_CASE("verify command") {
    std::ostringstream log;
    const auto out = temp_path("verify.txt");
    auto cfg = resolve_config(ExperimentKind::Verify, json(), {"seed_count=5", "output=" + json(out.string()).dump()});
    CHECK(cmd_verify(cfg, log) == 0);

    Mdp broken = build_random_mdp({3, 2, 0.9, 0, 1});
    auto doc = mdp_to_json(broken);
    doc["transitions"][1][0][0] = doc["transitions"][1][0][0].get<double>() + 0.25;
    const auto model = temp_path("broken.json");
    std::ofstream(model) << doc.dump();
    cfg.extra_mdps.push_back(model);
    CHECK(cmd_verify(cfg, log) == 1);
    CHECK(log.str().find("mdp_core") != std::string::npos);
    std::filesystem::remove(model);
    std::filesystem::remove(out);
}
