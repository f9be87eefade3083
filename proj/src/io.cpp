#include "hpi/io.hpp"

#include <fstream>
#include <ostream>

namespace hpi {

using nlohmann::json;

json mdp_to_json(const Mdp& mdp) {
    const int n = mdp.n_states();
    const int na = mdp.n_actions();
    json rewards = json::array();
    json transitions = json::array();
    for (int s = 0; s < n; ++s) {
        json r_row = json::array();
        json p_block = json::array();
        for (int a = 0; a < na; ++a) {
            r_row.push_back(mdp.reward(s, a));
            json p_row = json::array();
            for (int next = 0; next < n; ++next) p_row.push_back(mdp.transition(s, a, next));
            p_block.push_back(std::move(p_row));
        }
        rewards.push_back(std::move(r_row));
        transitions.push_back(std::move(p_block));
    }
    return json{{"n_states", n},
                {"n_actions", na},
                {"gamma", mdp.gamma()},
                {"r_min", mdp.r_min()},
                {"r_max", mdp.r_max()},
                {"rewards", std::move(rewards)},
                {"transitions", std::move(transitions)}};
}

Mdp mdp_from_json(const json& doc, bool validate_model) {
    try {
        const int n = doc.at("n_states").get<int>();
        const int na = doc.at("n_actions").get<int>();
        const double gamma = doc.at("gamma").get<double>();
        if (n <= 0 || na <= 0) throw ConfigError("n_states and n_actions must be positive");
        const auto& rewards = doc.at("rewards");
        const auto& transitions = doc.at("transitions");
        if (!rewards.is_array() || rewards.size() != static_cast<std::size_t>(n) ||
            !transitions.is_array() || transitions.size() != static_cast<std::size_t>(n)) {
            throw ConfigError("rewards and transitions must have n_states rows");
        }
        std::vector<double> r;
        std::vector<double> p;
        r.reserve(static_cast<std::size_t>(n) * na);
        p.reserve(static_cast<std::size_t>(n) * na * n);
        for (int s = 0; s < n; ++s) {
            if (rewards[s].size() != static_cast<std::size_t>(na) ||
                transitions[s].size() != static_cast<std::size_t>(na)) {
                throw ConfigError("state " + std::to_string(s) + ": expected n_actions entries");
            }
            for (int a = 0; a < na; ++a) {
                r.push_back(rewards[s][a].get<double>());
                const auto& row = transitions[s][a];
                if (row.size() != static_cast<std::size_t>(n)) {
                    throw ConfigError("transition row (" + std::to_string(s) + "," +
                                      std::to_string(a) + ") must have n_states entries");
                }
                for (const auto& x : row) p.push_back(x.get<double>());
            }
        }
        std::optional<double> r_min;
        std::optional<double> r_max;
        if (doc.contains("r_min")) r_min = doc["r_min"].get<double>();
        if (doc.contains("r_max")) r_max = doc["r_max"].get<double>();
        Mdp mdp(n, na, std::move(p), std::move(r), gamma, r_min, r_max);
        if (validate_model) require_valid(mdp);
        return mdp;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed MDP document: ") + e.what());
    }
}

Mdp load_mdp(const std::filesystem::path& path, bool validate_model) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return mdp_from_json(doc, validate_model);
}

void save_mdp(const Mdp& mdp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << mdp_to_json(mdp).dump(1) << '\n';
}

json run_report_to_json(const RunReport& report) {
    json iterations = json::array();
    for (const auto& rec : report.iterations) {
        json item{{"k", rec.k},
                  {"dist_value", rec.dist_value},
                  {"dist_policy_value", rec.dist_policy_value},
                  {"queries_this_iter", rec.queries_this_iter},
                  {"realized_eps_max", rec.realized_eps_max},
                  {"realized_delta_max", rec.realized_delta_max}};
        if (rec.shift_constant) item["shift_constant"] = *rec.shift_constant;
        if (rec.shifted_consistent) item["shifted_consistent"] = *rec.shifted_consistent;
        iterations.push_back(std::move(item));
    }
    std::vector<double> final_value(report.final_value.data(),
                                    report.final_value.data() + report.final_value.size());
    return json{{"iterations", std::move(iterations)},
                {"final_policy", report.final_policy.actions()},
                {"final_value", std::move(final_value)},
                {"total_queries", report.total_queries},
                {"stop_reason", std::string(to_string(report.stop_reason))},
                {"initial_dist_value", report.initial_dist_value},
                {"delta0", report.delta0}};
}

void write_trace_csv(const RunReport& report, std::ostream& out) {
    out << "k,dist_value,dist_policy_value,queries_cum,eps_max,delta_max\n";
    const auto old_precision = out.precision(17);
    std::uint64_t cum = 0;
    for (const auto& rec : report.iterations) {
        cum += rec.queries_this_iter;
        out << rec.k << ',' << rec.dist_value << ',' << rec.dist_policy_value << ',' << cum << ','
            << rec.realized_eps_max << ',' << rec.realized_delta_max << '\n';
    }
    out.precision(old_precision);
}

}  // namespace hpi
