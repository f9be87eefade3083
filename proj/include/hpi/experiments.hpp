#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpi/algorithms.hpp"
#include "hpi/envs.hpp"

namespace hpi {

enum class ExperimentKind { Tightness, Contraction, SweepNoiseless, SweepNoisy, Verify };

/// Shape of the seeded random MDPs used by the contraction experiment.
struct RandomInstanceRange {
    int min_states = 2;
    int max_states = 10;
    int min_actions = 2;
    int max_actions = 4;
    double gamma_min = 0.8;
    double gamma_max = 0.99;
    /// 0 draws dense rows; otherwise each row touches at most this many states.
    int branching = 0;
};

/// Deterministic random instance for one seed.
Mdp random_instance(const RandomInstanceRange& range, std::uint64_t seed);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::Verify;
    std::vector<double> gammas;
    std::vector<int> hs;
    std::vector<int> ms;
    std::vector<double> lambdas;
    std::vector<std::uint64_t> seeds;
    std::vector<Scheme> schemes;
    GridWorldSpec grid;
    RandomInstanceRange random;
    double eps_bound = 0.0;
    double delta_bound = 0.0;
    std::uint64_t query_budget = 0;
    double value_tol = 1e-7;
    int max_iterations = 100000;
    std::vector<std::filesystem::path> extra_mdps;
    std::optional<std::filesystem::path> output;
    int jobs = 1;
    /// Fully resolved document; the base of config_hash().
    nlohmann::json document;
};

/// Default document for a kind (all recognised keys present).
nlohmann::json default_document(ExperimentKind kind);

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);

/**
 * Merges `overrides` (a JSON object, usually a config file) over the defaults
 * of `kind`, then applies "key=json" assignments. Keys may be dotted
 * ("grid.n=12"); values that fail to parse as JSON are taken as strings.
 * Throws ConfigError on unknown keys, bad types, or empty ranges.
 */
ExperimentConfig resolve_config(ExperimentKind kind, const nlohmann::json& overrides,
                                const std::vector<std::string>& assignments = {});

/// FNV-1a of the resolved document, ignoring output path and job count. 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

// Each command writes CSV to cfg.output (stdout when unset) and progress to `log`.
// Return values are process exit codes: 0 success, 1 failed assertion.
int cmd_tightness(const ExperimentConfig& cfg, std::ostream& log);
int cmd_contraction(const ExperimentConfig& cfg, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, std::ostream& log);
int cmd_verify(const ExperimentConfig& cfg, std::ostream& log);

/// One (scheme, h, m, seed) cell of a grid-world sweep.
struct SweepRow {
    Scheme scheme = Scheme::HM_PI;
    int h = 1;
    int m = 1;
    std::uint64_t seed = 0;
    std::uint64_t queries = 0;
    int iterations = 0;
    double final_dist = 0.0;
    double final_policy_dist = 0.0;
    StopReason stop_reason = StopReason::MaxIterations;
};

/// Runs the sweep cells without writing anything; rows sorted by (scheme, h, m, seed).
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);

/// Runs one sweep cell (also used by the acceptance tests).
SweepRow run_sweep_cell(const ExperimentConfig& cfg, Scheme scheme, int h, int m,
                        std::uint64_t seed);

}  // namespace hpi
