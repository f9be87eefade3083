#include "hpi/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <tuple>

#include "hpi/bellman.hpp"
#include "hpi/consistency.hpp"
#include "hpi/io.hpp"
#include "hpi/verify.hpp"

namespace hpi {

using nlohmann::json;

namespace {

constexpr double kTightnessTolerance = 1e-10;
constexpr double kContractionSlack = 1e-10;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

json seed_range(std::uint64_t count) {
    json seeds = json::array();
    for (std::uint64_t s = 0; s < count; ++s) seeds.push_back(s);
    return seeds;
}

json int_range(int lo, int hi) {
    json out = json::array();
    for (int i = lo; i <= hi; ++i) out.push_back(i);
    return out;
}

json base_document() {
    return json{{"experiment", ""},
                {"gamma", json::array()},
                {"h", json::array()},
                {"m", json::array()},
                {"lambda", json::array()},
                {"seeds", json::array()},
                {"seed_count", nullptr},
                {"schemes", json::array()},
                {"grid",
                 {{"n", 10}, {"gamma", 0.97}, {"goal_reward", 1.0}, {"noise_min", -0.1}, {"noise_max", 0.1}}},
                {"random",
                 {{"min_states", 2},
                  {"max_states", 10},
                  {"min_actions", 2},
                  {"max_actions", 4},
                  {"gamma_min", 0.8},
                  {"gamma_max", 0.99},
                  {"branching", 0}}},
                {"eps_bound", 0.0},
                {"delta_bound", 0.0},
                {"query_budget", 0},
                {"value_tol", nullptr},
                {"max_iterations", 100000},
                {"extra_mdps", json::array()},
                {"output", nullptr},
                {"jobs", 1}};
}

// Recursive merge that rejects keys absent from `target`.
void merge_known(json& target, const json& patch, const std::string& prefix) {
    if (!patch.is_object()) throw ConfigError("configuration must be a JSON object");
    for (const auto& [key, value] : patch.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!target.contains(key)) throw ConfigError("unknown configuration key '" + path + "'");
        auto& slot = target[key];
        if (slot.is_object()) {
            merge_known(slot, value, path);
        } else {
            slot = value;
        }
    }
}

void apply_assignment(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json patch = value;
    std::string rest = key;
    std::vector<std::string> parts;
    for (std::size_t dot; (dot = rest.find('.')) != std::string::npos; rest = rest.substr(dot + 1)) {
        parts.push_back(rest.substr(0, dot));
    }
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    merge_known(doc, patch, "");
}

template <typename T>
std::vector<T> read_list(const json& doc, const char* key) {
    const auto& node = doc.at(key);
    if (!node.is_array() || node.empty()) throw ConfigError(std::string("'") + key + "' must be a non-empty list");
    return node.get<std::vector<T>>();
}

std::ostream& open_output(const ExperimentConfig& cfg, std::ofstream& file) {
    if (!cfg.output) return std::cout;
    if (cfg.output->has_parent_path()) std::filesystem::create_directories(cfg.output->parent_path());
    file.open(*cfg.output);
    if (!file) throw ConfigError("cannot write " + cfg.output->string());
    return file;
}

void require_schemes_with_m(const ExperimentConfig& cfg) {
    for (auto s : cfg.schemes) {
        if (!uses_m(s)) {
            throw ConfigError("sweep supports m-schemes only, got " + std::string(to_string(s)));
        }
    }
}

}  // namespace

Mdp random_instance(const RandomInstanceRange& range, std::uint64_t seed) {
    if (range.min_states < 1 || range.max_states < range.min_states || range.min_actions < 1 ||
        range.max_actions < range.min_actions || !(range.gamma_min > 0.0) ||
        !(range.gamma_max < 1.0) || range.gamma_max < range.gamma_min) {
        throw ConfigError("random instance range is empty or out of bounds");
    }
    std::mt19937_64 rng(splitmix64(seed));
    RandomMdpSpec spec;
    spec.n_states = std::uniform_int_distribution<int>(range.min_states, range.max_states)(rng);
    spec.n_actions = std::uniform_int_distribution<int>(range.min_actions, range.max_actions)(rng);
    spec.gamma = std::uniform_real_distribution<double>(range.gamma_min, range.gamma_max)(rng);
    spec.branching = range.branching;
    spec.rng_seed = rng();
    return build_random_mdp(spec);
}

std::string to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::Tightness: return "tightness";
        case ExperimentKind::Contraction: return "contraction";
        case ExperimentKind::SweepNoiseless: return "sweep_noiseless";
        case ExperimentKind::SweepNoisy: return "sweep_noisy";
        case ExperimentKind::Verify: return "verify";
    }
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto kind : {ExperimentKind::Tightness, ExperimentKind::Contraction, ExperimentKind::SweepNoiseless,
                      ExperimentKind::SweepNoisy, ExperimentKind::Verify}) {
        if (lower == to_string(kind)) return kind;
    }
    throw ConfigError("unknown experiment '" + name + "'");
}

json default_document(ExperimentKind kind) {
    json doc = base_document();
    doc["experiment"] = to_string(kind);
    switch (kind) {
        case ExperimentKind::Tightness:
            doc["gamma"] = {0.9, 0.97, 0.99};
            doc["h"] = {2, 3, 5};
            doc["m"] = {1, 2, 5, 10};
            doc["lambda"] = {0.0, 0.3, 0.7, 0.95};
            doc["seeds"] = {0};
            break;
        case ExperimentKind::Contraction:
            doc["gamma"] = {0.9};
            doc["h"] = {1, 2, 3};
            doc["m"] = {1, 2, 5};
            doc["lambda"] = {0.0, 0.5, 0.9};
            doc["seeds"] = seed_range(200);
            break;
        case ExperimentKind::SweepNoiseless:
        case ExperimentKind::SweepNoisy:
            doc["gamma"] = {0.97};
            doc["h"] = int_range(1, 8);
            doc["m"] = int_range(1, 30);
            doc["lambda"] = {0.0};
            doc["seeds"] = seed_range(10);
            doc["schemes"] = {"NC_HM_PI", "HM_PI"};
            if (kind == ExperimentKind::SweepNoiseless) {
                doc["value_tol"] = 1e-7;
            } else {
                doc["eps_bound"] = 0.3;
                doc["query_budget"] = 4000000;
                doc["max_iterations"] = 10000000;
            }
            break;
        case ExperimentKind::Verify:
            doc["gamma"] = {0.9};
            doc["h"] = {1};
            doc["m"] = {1};
            doc["lambda"] = {0.0};
            doc["seeds"] = seed_range(20);
            break;
    }
    return doc;
}

ExperimentConfig resolve_config(ExperimentKind kind, const json& overrides,
                                const std::vector<std::string>& assignments) {
    json doc = default_document(kind);
    if (!overrides.is_null()) {
        if (overrides.contains("experiment") &&
            parse_experiment_kind(overrides["experiment"].get<std::string>()) != kind) {
            // A sweep file may name either sweep mode; anything else is a mismatch.
            const auto named = parse_experiment_kind(overrides["experiment"].get<std::string>());
            const bool both_sweeps = (named == ExperimentKind::SweepNoisy || named == ExperimentKind::SweepNoiseless) &&
                                     (kind == ExperimentKind::SweepNoisy || kind == ExperimentKind::SweepNoiseless);
            if (!both_sweeps) {
                throw ConfigError("config file is for '" + overrides["experiment"].get<std::string>() +
                                  "', not '" + to_string(kind) + "'");
            }
        }
        json patch = overrides;
        patch.erase("experiment");
        merge_known(doc, patch, "");
    }
    for (const auto& a : assignments) apply_assignment(doc, a);

    ExperimentConfig cfg;
    cfg.experiment = kind;
    try {
        if (!doc["seed_count"].is_null()) {
            const auto count = doc["seed_count"].get<std::int64_t>();
            if (count < 0) throw ConfigError("seed_count must be non-negative");
            doc["seeds"] = seed_range(static_cast<std::uint64_t>(count));
            doc["seed_count"] = nullptr;
        }
        if (!doc["seeds"].is_array() || doc["seeds"].empty()) throw ConfigError("seed list is empty");
        cfg.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
        cfg.gammas = read_list<double>(doc, "gamma");
        cfg.hs = read_list<int>(doc, "h");
        cfg.ms = read_list<int>(doc, "m");
        cfg.lambdas = read_list<double>(doc, "lambda");
        for (int h : cfg.hs) {
            if (h < 1) throw ConfigError("h must be positive");
        }
        for (int m : cfg.ms) {
            if (m < 1) throw ConfigError("m must be positive");
        }
        for (double g : cfg.gammas) {
            if (!(g > 0.0 && g < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
        }
        for (double l : cfg.lambdas) {
            if (!(l >= 0.0 && l <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
        }
        for (const auto& name : doc["schemes"]) cfg.schemes.push_back(parse_scheme(name.get<std::string>()));

        const auto& g = doc["grid"];
        cfg.grid.n = g["n"].get<int>();
        cfg.grid.gamma = g["gamma"].get<double>();
        cfg.grid.goal_reward = g["goal_reward"].get<double>();
        cfg.grid.noise_reward_range = {g["noise_min"].get<double>(), g["noise_max"].get<double>()};
        const auto& r = doc["random"];
        cfg.random.min_states = r["min_states"].get<int>();
        cfg.random.max_states = r["max_states"].get<int>();
        cfg.random.min_actions = r["min_actions"].get<int>();
        cfg.random.max_actions = r["max_actions"].get<int>();
        cfg.random.gamma_min = r["gamma_min"].get<double>();
        cfg.random.gamma_max = r["gamma_max"].get<double>();
        cfg.random.branching = r["branching"].get<int>();

        cfg.eps_bound = doc["eps_bound"].get<double>();
        cfg.delta_bound = doc["delta_bound"].get<double>();
        cfg.query_budget = doc["query_budget"].get<std::uint64_t>();
        if (!doc["value_tol"].is_null()) cfg.value_tol = doc["value_tol"].get<double>();
        else cfg.value_tol = -1.0;
        cfg.max_iterations = doc["max_iterations"].get<int>();
        for (const auto& p : doc["extra_mdps"]) cfg.extra_mdps.emplace_back(p.get<std::string>());
        if (!doc["output"].is_null()) cfg.output = doc["output"].get<std::string>();
        cfg.jobs = doc["jobs"].get<int>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad configuration value: ") + e.what());
    }
    if (cfg.eps_bound < 0.0 || cfg.delta_bound < 0.0) throw ConfigError("noise bounds must be non-negative");
    if (cfg.jobs < 1) throw ConfigError("jobs must be at least 1");
    if (cfg.max_iterations < 1) throw ConfigError("max_iterations must be positive");
    if ((kind == ExperimentKind::SweepNoiseless || kind == ExperimentKind::SweepNoisy)) {
        if (cfg.schemes.empty()) throw ConfigError("sweep needs at least one scheme");
        cfg.grid.check();
        if (cfg.value_tol < 0.0 && cfg.query_budget == 0) {
            throw ConfigError("sweep needs value_tol or query_budget, otherwise it never stops");
        }
    }
    cfg.document = std::move(doc);
    return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
    json doc = cfg.document;
    doc.erase("output");
    doc.erase("jobs");
    const std::string text = doc.dump();
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << hash;
    return out.str();
}

int cmd_tightness(const ExperimentConfig& cfg, std::ostream& log) {
    for (double g : cfg.gammas) {
        for (int h : cfg.hs) CounterexampleSpec{g, h}.check();
    }
    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    const std::string hash = config_hash(cfg);
    out << std::setprecision(17);
    out << "gamma,h,kind,param,measured,predicted,abs_error,config_hash\n";
    int mismatches = 0;
    int rows = 0;
    auto emit = [&](double g, int h, const char* kind, double param, double measured, double predicted) {
        const double err = std::abs(measured - predicted);
        if (!(err <= kTightnessTolerance)) ++mismatches;
        ++rows;
        out << g << ',' << h << ',' << kind << ',' << param << ',' << measured << ',' << predicted << ','
            << err << ',' << hash << '\n';
    };
    for (double g : cfg.gammas) {
        for (int h : cfg.hs) {
            const auto ce = build_counterexample({g, h});
            const ValueFunction v_star = optimal_value(ce.mdp).value;
            const double base = max_norm(v_star - ce.v);
            for (int m : cfg.ms) {
                const double measured = max_norm(v_star - m_return(ce.mdp, ce.pi_h, ce.v, m)) / base;
                emit(g, h, "m", m, measured, std::pow(g, m) + std::pow(g, h));
            }
            for (double lambda : cfg.lambdas) {
                const double measured = max_norm(v_star - lambda_return(ce.mdp, ce.pi_h, ce.v, {lambda})) / base;
                emit(g, h, "lambda", lambda, measured, std::pow(g, h) + g * (1.0 - lambda) / (1.0 - g * lambda));
            }
        }
    }
    log << "tightness: " << rows - mismatches << '/' << rows << " within " << kTightnessTolerance << '\n';
    return mismatches == 0 ? 0 : 1;
}

int cmd_contraction(const ExperimentConfig& cfg, std::ostream& log) {
    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    const std::string hash = config_hash(cfg);
    out << std::setprecision(17);
    out << "seed,n_states,n_actions,gamma,h,m,lambda,ratio_m,ratio_lambda,bound,config_hash\n";
    int violations = 0;
    int rows = 0;
    for (auto seed : cfg.seeds) {
        const Mdp mdp = random_instance(cfg.random, seed);
        const ValueFunction v_star = optimal_value(mdp).value;
        const ValueFunction v = ValueFunction::Constant(mdp.n_states(), mdp.r_min() / (1.0 - mdp.gamma()));
        for (int h : cfg.hs) {
            const double bound = std::pow(mdp.gamma(), h);
            for (int m : cfg.ms) {
                for (double lambda : cfg.lambdas) {
                    const auto r = verify_gamma_h_contraction(mdp, v_star, v, h, m, {lambda});
                    const bool ok = r.m_return <= bound + kContractionSlack && r.lambda_return <= bound + kContractionSlack;
                    if (!ok) ++violations;
                    ++rows;
                    out << seed << ',' << mdp.n_states() << ',' << mdp.n_actions() << ',' << mdp.gamma() << ','
                        << h << ',' << m << ',' << lambda << ',' << r.m_return << ',' << r.lambda_return << ','
                        << bound << ',' << hash << '\n';
                }
            }
        }
    }
    log << "contraction: " << rows - violations << '/' << rows << " within gamma^h + " << kContractionSlack << '\n';
    return violations == 0 ? 0 : 1;
}

SweepRow run_sweep_cell(const ExperimentConfig& cfg, Scheme scheme, int h, int m, std::uint64_t seed) {
    GridWorldSpec spec = cfg.grid;
    spec.rng_seed = seed;
    const auto world = build_gridworld(spec);
    const ValueFunction v0 = initial_value(world.mdp.n_states(), splitmix64(seed));
    const ValueFunction v_star = optimal_value(world.mdp).value;

    AlgoConfig algo;
    algo.scheme = scheme;
    algo.h = h;
    if (uses_m(scheme)) algo.m = m;
    else if (uses_lambda(scheme)) algo.lambda = cfg.lambdas.front();
    algo.eval_noise_bound = cfg.eps_bound;
    algo.greedy_noise_bound = cfg.delta_bound;
    // Same noise stream for every scheme in a cell.
    algo.rng_seed = splitmix64(seed ^ (static_cast<std::uint64_t>(h) << 32) ^ static_cast<std::uint64_t>(m));
    if (cfg.value_tol >= 0.0) algo.stop.value_tol = cfg.value_tol;
    algo.stop.query_budget = cfg.query_budget;
    algo.stop.max_iterations = cfg.max_iterations;

    const auto report = run(world.mdp, v_star, v0, algo);
    SweepRow row{scheme, h, m, seed};
    row.queries = report.total_queries;
    row.iterations = static_cast<int>(report.iterations.size());
    row.stop_reason = report.stop_reason;
    if (report.iterations.empty()) {
        row.final_dist = report.initial_dist_value;
        row.final_policy_dist = max_norm(v_star - evaluate_policy_exact(world.mdp, report.final_policy));
    } else {
        row.final_dist = report.iterations.back().dist_value;
        row.final_policy_dist = report.iterations.back().dist_policy_value;
    }
    return row;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
    require_schemes_with_m(cfg);
    struct Cell {
        Scheme scheme;
        int h;
        int m;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (auto scheme : cfg.schemes) {
        for (int h : cfg.hs) {
            for (int m : cfg.ms) {
                for (auto seed : cfg.seeds) cells.push_back({scheme, h, m, seed});
            }
        }
    }
    std::vector<SweepRow> rows(cells.size());
    std::vector<std::exception_ptr> errors(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
            try {
                rows[i] = run_sweep_cell(cfg, cells[i].scheme, cells[i].h, cells[i].m, cells[i].seed);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int jobs = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(cells.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return std::tie(a.scheme, a.h, a.m, a.seed) < std::tie(b.scheme, b.h, b.m, b.seed);
    });
    return rows;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log) {
    const bool noisy = cfg.experiment == ExperimentKind::SweepNoisy;
    const auto rows = run_sweep(cfg);
    const std::string hash = config_hash(cfg);

    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    out << std::setprecision(17);
    out << "scheme,h,m,seed,queries,iterations,final_dist";
    if (noisy) out << ",eps_bound,delta_bound,final_policy_dist";
    out << ",stop_reason,config_hash\n";
    for (const auto& r : rows) {
        out << to_string(r.scheme) << ',' << r.h << ',' << r.m << ',' << r.seed << ',' << r.queries << ','
            << r.iterations << ',' << r.final_dist;
        if (noisy) out << ',' << cfg.eps_bound << ',' << cfg.delta_bound << ',' << r.final_policy_dist;
        out << ',' << to_string(r.stop_reason) << ',' << hash << '\n';
    }

    // Companion statistics: mean and standard error per (scheme, h, m).
    std::ofstream stats_file;
    std::ostream* stats = &log;
    if (cfg.output) {
        stats_file.open(cfg.output->string() + ".stats.csv");
        if (!stats_file) throw ConfigError("cannot write stats file next to " + cfg.output->string());
        stats = &stats_file;
    }
    *stats << std::setprecision(17);
    *stats << "scheme,h,m,n_seeds,mean_queries,se_queries,mean_iterations,mean_final_dist,se_final_dist,"
              "mean_final_policy_dist,se_final_policy_dist,config_hash\n";
    auto mean_se = [](const std::vector<double>& xs) {
        const double n = static_cast<double>(xs.size());
        const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        const double se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
        return std::pair{mean, se};
    };
    int unconverged = 0;
    for (std::size_t i = 0; i < rows.size();) {
        std::size_t j = i;
        std::vector<double> q, it, fd, pd;
        while (j < rows.size() && rows[j].scheme == rows[i].scheme && rows[j].h == rows[i].h && rows[j].m == rows[i].m) {
            q.push_back(static_cast<double>(rows[j].queries));
            it.push_back(rows[j].iterations);
            fd.push_back(rows[j].final_dist);
            pd.push_back(rows[j].final_policy_dist);
            if (!noisy && rows[j].stop_reason != StopReason::Converged) ++unconverged;
            ++j;
        }
        const auto [mq, sq] = mean_se(q);
        const auto [fm, fs] = mean_se(fd);
        const auto [pm, ps] = mean_se(pd);
        *stats << to_string(rows[i].scheme) << ',' << rows[i].h << ',' << rows[i].m << ',' << q.size() << ',' << mq
               << ',' << sq << ',' << mean_se(it).first << ',' << fm << ',' << fs << ',' << pm << ',' << ps << ','
               << hash << '\n';
        i = j;
    }
    log << "sweep: " << rows.size() << " runs";
    if (unconverged > 0) log << ", " << unconverged << " stopped before reaching value_tol";
    log << '\n';
    return 0;
}

int cmd_verify(const ExperimentConfig& cfg, std::ostream& log) {
    VerifyOptions options;
    options.seeds = cfg.seeds;
    for (const auto& path : cfg.extra_mdps) options.extra_mdps.push_back(load_mdp(path, false));
    const auto suites = run_verification(options);
    std::vector<std::string> failed;
    std::ofstream file;
    std::ostream& out = open_output(cfg, file);
    for (const auto& s : suites) {
        out << s.name << ": " << s.passed << '/' << s.total << (s.ok() ? " ok" : " FAILED") << '\n';
        for (const auto& f : s.failures) out << "  " << f << '\n';
        if (!s.ok()) failed.push_back(s.name);
    }
    if (failed.empty()) return 0;
    log << "failing suites:";
    for (const auto& name : failed) log << ' ' << name;
    log << '\n';
    return 1;
}

}  // namespace hpi
