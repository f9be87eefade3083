#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hpi/mdp.hpp"

namespace hpi {

struct SuiteResult {
    std::string name;
    int passed = 0;
    int total = 0;
    std::vector<std::string> failures;

    bool ok() const { return passed == total; }
};

struct VerifyOptions {
    std::vector<std::uint64_t> seeds;
    /// Additional models, loaded without validation; checked by the mdp_core suite.
    std::vector<Mdp> extra_mdps;
};

/**
 * Runs the invariant suites (mdp_core, bellman, h_greedy, consistency,
 * algorithms, envs) over one random instance per seed. Results come back
 * in that fixed order.
 */
std::vector<SuiteResult> run_verification(const VerifyOptions& options);

/// Best deterministic policy value by exhaustive enumeration of the |A|^|S| policies.
/// Throws std::invalid_argument when that count exceeds `limit`.
ValueFunction enumerate_optimal_value(const Mdp& mdp, std::uint64_t limit = 4096);

}  // namespace hpi
