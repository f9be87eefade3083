// Experiment driver: tightness, contraction, sweep, verify.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hpi/experiments.hpp"

namespace {

struct Common {
    std::string config_path;
    std::string out;
    int jobs = 0;
    long long seed_count = -1;
    std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config_path, "JSON configuration file");
    cmd->add_option("--out", c.out, "Output path (stdout when omitted)");
    cmd->add_option("--jobs", c.jobs, "Parallel runs")->check(CLI::PositiveNumber);
    cmd->add_option("--seed-count", c.seed_count, "Use seeds 0..n-1")->check(CLI::NonNegativeNumber);
    cmd->add_option("--set", c.sets, "Override a configuration key: key=json (repeatable)");
}

hpi::ExperimentConfig build(hpi::ExperimentKind kind, const Common& c) {
    nlohmann::json file_doc;
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) throw hpi::ConfigError("cannot open " + c.config_path);
        file_doc = nlohmann::json::parse(in, nullptr, false);
        if (file_doc.is_discarded()) throw hpi::ConfigError(c.config_path + ": not valid JSON");
        // Model paths in a config file are relative to that file.
        if (file_doc.is_object() && file_doc.contains("extra_mdps") && file_doc["extra_mdps"].is_array()) {
            const auto base = std::filesystem::path(c.config_path).parent_path();
            for (auto& p : file_doc["extra_mdps"]) {
                if (p.is_string() && std::filesystem::path(p.get<std::string>()).is_relative()) {
                    p = (base / p.get<std::string>()).string();
                }
            }
        }
    }
    std::vector<std::string> sets = c.sets;
    if (!c.out.empty()) sets.push_back("output=" + nlohmann::json(c.out).dump());
    if (c.jobs > 0) sets.push_back("jobs=" + std::to_string(c.jobs));
    if (c.seed_count >= 0) sets.push_back("seed_count=" + std::to_string(c.seed_count));
    return hpi::resolve_config(kind, file_doc, sets);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-step greedy policy iteration experiments"};
    app.require_subcommand(1);

    Common tight, contr, sweep, verify;
    std::string mode = "noiseless";
    auto* c_tight = app.add_subcommand("tightness", "Exact ratios on the counterexample MDP");
    auto* c_contr = app.add_subcommand("contraction", "gamma^h contraction on random MDPs");
    auto* c_sweep = app.add_subcommand("sweep", "Grid-world h x m sweep of NC_HM_PI and HM_PI");
    auto* c_verify = app.add_subcommand("verify", "Invariant suites on seeded random instances");
    add_common(c_tight, tight);
    add_common(c_contr, contr);
    add_common(c_sweep, sweep);
    add_common(c_verify, verify);
    c_sweep->add_option("--mode", mode, "noiseless or noisy")->check(CLI::IsMember({"noiseless", "noisy"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_tight->parsed()) return hpi::cmd_tightness(build(hpi::ExperimentKind::Tightness, tight), std::cerr);
        if (c_contr->parsed()) return hpi::cmd_contraction(build(hpi::ExperimentKind::Contraction, contr), std::cerr);
        if (c_sweep->parsed()) {
            const auto kind = mode == "noisy" ? hpi::ExperimentKind::SweepNoisy : hpi::ExperimentKind::SweepNoiseless;
            return hpi::cmd_sweep(build(kind, sweep), std::cerr);
        }
        return hpi::cmd_verify(build(hpi::ExperimentKind::Verify, verify), std::cerr);
    } catch (const hpi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const hpi::InvalidMdp& e) {
        std::cerr << "invalid model: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
