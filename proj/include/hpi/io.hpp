#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "hpi/algorithms.hpp"
#include "hpi/mdp.hpp"

namespace hpi {

/// {n_states, n_actions, gamma, rewards[s][a], transitions[s][a][s'], r_min, r_max}.
nlohmann::json mdp_to_json(const Mdp& mdp);

/// Parses the MDP document. r_min/r_max are optional and default to the reward
/// range. Throws ConfigError on malformed documents and InvalidMdp when
/// `validate_model` is set and the model fails validation.
Mdp mdp_from_json(const nlohmann::json& doc, bool validate_model = true);

Mdp load_mdp(const std::filesystem::path& path, bool validate_model = true);
void save_mdp(const Mdp& mdp, const std::filesystem::path& path);

nlohmann::json run_report_to_json(const RunReport& report);

/// Columns: k, dist_value, dist_policy_value, queries_cum, eps_max, delta_max.
void write_trace_csv(const RunReport& report, std::ostream& out);

}  // namespace hpi
