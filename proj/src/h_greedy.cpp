#include "hpi/h_greedy.hpp"

#include <algorithm>

#include "hpi/bellman.hpp"

namespace hpi {

namespace {

void check_horizon(int h) {
    if (h < 1) throw std::invalid_argument("horizon h must be at least 1");
}

}  // namespace

TreeBackupResult tree_backup(const Mdp& mdp, const ValueFunction& v, int h) {
    check_horizon(h);
    check_value(mdp, v);
    TreeBackupResult out;
    out.horizon = h;
    out.backed_value = apply_t_opt_n(mdp, v, h - 1);
    out.policy = greedy_policy(mdp, out.backed_value);
    out.root_value = apply_t_pi(mdp, out.policy, out.backed_value);
    out.delta_drawn = ValueFunction::Zero(mdp.n_states());
    out.delta_shortfall = ValueFunction::Zero(mdp.n_states());
    return out;
}

TreeBackupResult approx_tree_backup(const Mdp& mdp, const ValueFunction& v, int h,
                                    double delta_bound, bool adversarial,
                                    std::mt19937_64& rng) {
    if (!(delta_bound >= 0.0)) throw std::invalid_argument("delta_bound must be nonnegative");
    if (delta_bound == 0.0) return tree_backup(mdp, v, h);
    check_horizon(h);
    check_value(mdp, v);

    const int n = mdp.n_states();
    TreeBackupResult out;
    out.horizon = h;
    out.backed_value = apply_t_opt_n(mdp, v, h - 1);
    const Eigen::MatrixXd q = q_values(mdp, out.backed_value);
    out.delta_drawn.resize(n);
    out.delta_shortfall.resize(n);
    out.root_value.resize(n);
    std::vector<int> actions(n, 0);
    std::uniform_real_distribution<double> allowance(0.0, delta_bound);
    std::vector<int> admissible;
    for (int s = 0; s < n; ++s) {
        const double best = q.row(s).maxCoeff();
        const double d = allowance(rng);
        admissible.clear();
        for (int a = 0; a < mdp.n_actions(); ++a) {
            if (q(s, a) >= best - d) admissible.push_back(a);
        }
        int chosen = admissible.front();
        if (adversarial) {
            for (int a : admissible) {
                if (q(s, a) < q(s, chosen)) chosen = a;
            }
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, admissible.size() - 1);
            chosen = admissible[pick(rng)];
        }
        actions[s] = chosen;
        out.delta_drawn(s) = d;
        out.root_value(s) = q(s, chosen);
        out.delta_shortfall(s) = best - q(s, chosen);
    }
    out.policy = Policy(std::move(actions));
    return out;
}

TreeBackupResult approx_tree_backup(const Mdp& mdp, const ValueFunction& v, int h,
                                    const GreedyNoise& noise) {
    std::mt19937_64 rng(noise.rng_seed);
    return approx_tree_backup(mdp, v, h, noise.delta_bound, noise.adversarial, rng);
}

bool is_in_h_greedy_set(const Mdp& mdp, const ValueFunction& v, const Policy& pi, int h) {
    check_horizon(h);
    const ValueFunction backed = apply_t_opt_n(mdp, v, h - 1);
    const ValueFunction root = apply_t_pi(mdp, pi, backed);
    return max_norm(root - apply_t_opt(mdp, backed)) <= 1e-10;
}

}  // namespace hpi
