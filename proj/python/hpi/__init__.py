"""Multi-step greedy policy iteration on tabular MDPs."""

from ._core import (
    ConfigError,
    Counterexample,
    GridWorld,
    Mdp,
    SolverFailure,
    apply_t_opt,
    apply_t_opt_n,
    apply_t_pi,
    bar_lambda_return,
    build_counterexample,
    build_gridworld,
    build_random_mdp,
    check_consistency,
    delta0,
    evaluate_policy_exact,
    greedy_policy,
    initial_value,
    lambda_return,
    m_return,
    optimal_value,
    q_values,
    query_cost,
    run,
    shift_to_consistent,
    tree_backup,
    validate,
    verify_gamma_h_contraction,
    verify_monotone_chain,
)

__all__ = [name for name in dir() if not name.startswith("_")]
