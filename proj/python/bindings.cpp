#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hpi/algorithms.hpp"
#include "hpi/bellman.hpp"
#include "hpi/consistency.hpp"
#include "hpi/envs.hpp"
#include "hpi/h_greedy.hpp"
#include "hpi/io.hpp"

namespace py = pybind11;
using namespace hpi;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Actions = std::vector<int>;

Mdp make_mdp(const Array& p, const Array& r, double gamma, std::optional<double> r_min,
             std::optional<double> r_max, bool validate_model) {
    if (p.ndim() != 3 || r.ndim() != 2) {
        throw py::value_error("expected P of shape (S, A, S) and R of shape (S, A)");
    }
    const auto n = static_cast<int>(p.shape(0));
    const auto na = static_cast<int>(p.shape(1));
    if (p.shape(2) != n || r.shape(0) != n || r.shape(1) != na) {
        throw py::value_error("P and R shapes disagree");
    }
    Mdp mdp(n, na, std::vector<double>(p.data(), p.data() + p.size()),
            std::vector<double>(r.data(), r.data() + r.size()), gamma, r_min, r_max);
    if (validate_model) require_valid(mdp);
    return mdp;
}

Array transitions_array(const Mdp& mdp) {
    Array out({mdp.n_states(), mdp.n_actions(), mdp.n_states()});
    std::copy(mdp.transitions().begin(), mdp.transitions().end(), out.mutable_data());
    return out;
}

Array rewards_array(const Mdp& mdp) {
    Array out({mdp.n_states(), mdp.n_actions()});
    std::copy(mdp.rewards().begin(), mdp.rewards().end(), out.mutable_data());
    return out;
}

Policy policy(const Mdp& mdp, const Actions& a) {
    Policy pi(a);
    check_policy(mdp, pi);
    return pi;
}

py::dict report_dict(const RunReport& report) {
    py::list iterations;
    for (const auto& rec : report.iterations) {
        py::dict d;
        d["k"] = rec.k;
        d["dist_value"] = rec.dist_value;
        d["dist_policy_value"] = rec.dist_policy_value;
        d["queries_this_iter"] = rec.queries_this_iter;
        d["realized_eps_max"] = rec.realized_eps_max;
        d["realized_delta_max"] = rec.realized_delta_max;
        if (rec.shift_constant) d["shift_constant"] = *rec.shift_constant;
        if (rec.shifted_consistent) d["shifted_consistent"] = *rec.shifted_consistent;
        iterations.append(std::move(d));
    }
    py::dict out;
    out["iterations"] = iterations;
    out["final_policy"] = report.final_policy.actions();
    out["final_value"] = report.final_value;
    out["total_queries"] = report.total_queries;
    out["stop_reason"] = std::string(to_string(report.stop_reason));
    out["initial_dist_value"] = report.initial_dist_value;
    out["delta0"] = report.delta0;
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tabular multi-step greedy policy iteration";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<SolverFailure>(m, "SolverFailure", PyExc_RuntimeError);
    py::register_exception<InvalidMdp>(m, "InvalidMdp", PyExc_ValueError);
    py::register_exception<PreconditionViolated>(m, "PreconditionViolated", PyExc_ValueError);
    py::register_exception<DivisionDegenerate>(m, "DivisionDegenerate", PyExc_ArithmeticError);

    py::class_<Mdp>(m, "Mdp")
        .def(py::init(&make_mdp), py::arg("P"), py::arg("R"), py::arg("gamma"),
             py::arg("r_min") = py::none(), py::arg("r_max") = py::none(), py::arg("validate") = true)
        .def_property_readonly("n_states", &Mdp::n_states)
        .def_property_readonly("n_actions", &Mdp::n_actions)
        .def_property_readonly("gamma", &Mdp::gamma)
        .def_property_readonly("r_min", &Mdp::r_min)
        .def_property_readonly("r_max", &Mdp::r_max)
        .def_property_readonly("P", &transitions_array)
        .def_property_readonly("R", &rewards_array)
        .def("to_json", [](const Mdp& mdp) { return mdp_to_json(mdp).dump(); })
        .def_static("from_json", [](const std::string& text, bool validate_model) {
            return mdp_from_json(nlohmann::json::parse(text), validate_model);
        }, py::arg("text"), py::arg("validate") = true);

    m.def("validate", [](const Mdp& mdp) {
        std::vector<std::string> issues;
        for (const auto& issue : validate(mdp).issues) issues.push_back(issue.message);
        return issues;
    }, "Validation messages; empty when the model is well formed.");

    m.def("evaluate_policy_exact", [](const Mdp& mdp, const Actions& a) {
        return evaluate_policy_exact(mdp, policy(mdp, a));
    });
    m.def("optimal_value", [](const Mdp& mdp) {
        const auto sol = optimal_value(mdp);
        return py::make_tuple(sol.value, sol.policy.actions());
    }, "Returns (v*, optimal policy).");

    m.def("apply_t_pi", [](const Mdp& mdp, const Actions& a, const ValueFunction& v) {
        return apply_t_pi(mdp, policy(mdp, a), v);
    });
    m.def("q_values", &q_values);
    m.def("apply_t_opt", &apply_t_opt);
    m.def("apply_t_opt_n", &apply_t_opt_n, py::arg("mdp"), py::arg("v"), py::arg("h"));
    m.def("greedy_policy", [](const Mdp& mdp, const ValueFunction& v) { return greedy_policy(mdp, v).actions(); });
    m.def("m_return", [](const Mdp& mdp, const Actions& a, const ValueFunction& v, int steps) {
        return m_return(mdp, policy(mdp, a), v, steps);
    }, py::arg("mdp"), py::arg("pi"), py::arg("v"), py::arg("m"));
    m.def("lambda_return", [](const Mdp& mdp, const Actions& a, const ValueFunction& v, double lambda) {
        return lambda_return(mdp, policy(mdp, a), v, {lambda});
    }, py::arg("mdp"), py::arg("pi"), py::arg("v"), py::arg("lam"));
    m.def("bar_lambda_return", [](const Mdp& mdp, const Actions& a, const ValueFunction& v, double lambda) {
        return bar_lambda_return(mdp, policy(mdp, a), v, {lambda});
    }, py::arg("mdp"), py::arg("pi"), py::arg("v"), py::arg("lam"));

    m.def("tree_backup", [](const Mdp& mdp, const ValueFunction& v, int h, double delta, std::uint64_t seed,
                            bool adversarial) {
        const auto r = delta > 0.0 ? approx_tree_backup(mdp, v, h, GreedyNoise{delta, seed, adversarial})
                                   : tree_backup(mdp, v, h);
        py::dict out;
        out["policy"] = r.policy.actions();
        out["backed_value"] = r.backed_value;
        out["root_value"] = r.root_value;
        if (delta > 0.0) {
            out["delta_drawn"] = r.delta_drawn;
            out["delta_shortfall"] = r.delta_shortfall;
        }
        return out;
    }, py::arg("mdp"), py::arg("v"), py::arg("h"), py::arg("delta") = 0.0, py::arg("seed") = 0,
       py::arg("adversarial") = false);

    m.def("check_consistency", [](const Mdp& mdp, const ValueFunction& v, const Actions& a, int h) {
        const auto r = check_consistency(mdp, v, policy(mdp, a), h);
        py::dict out;
        out["consistent"] = r.consistent;
        out["max_violation"] = r.max_violation;
        out["shift_delta"] = r.shift_delta;
        return out;
    });
    m.def("shift_to_consistent", [](const Mdp& mdp, const ValueFunction& v, const Actions& a, int h) {
        return shift_to_consistent(mdp, v, policy(mdp, a), h);
    });
    m.def("delta0", [](const Mdp& mdp, const ValueFunction& v, const Actions& a, int h) {
        return delta0(mdp, v, policy(mdp, a), h);
    });
    m.def("verify_monotone_chain", [](const Mdp& mdp, const ValueFunction& v, const Actions& a, int h, int l_max) {
        return verify_monotone_chain(mdp, v, policy(mdp, a), h, l_max);
    });
    m.def("verify_gamma_h_contraction", [](const Mdp& mdp, const ValueFunction& v, int h, int steps, double lambda) {
        const auto r = verify_gamma_h_contraction(mdp, v, h, steps, {lambda});
        return py::make_tuple(r.m_return, r.lambda_return);
    }, py::arg("mdp"), py::arg("v"), py::arg("h"), py::arg("m"), py::arg("lam"));

    py::class_<Counterexample>(m, "Counterexample")
        .def_readonly("mdp", &Counterexample::mdp)
        .def_readonly("v", &Counterexample::v)
        .def_property_readonly("pi_h", [](const Counterexample& c) { return c.pi_h.actions(); });
    m.def("build_counterexample", [](double gamma, int h) { return build_counterexample({gamma, h}); },
          py::arg("gamma"), py::arg("h"));

    py::class_<GridWorld>(m, "GridWorld")
        .def_readonly("mdp", &GridWorld::mdp)
        .def_readonly("goal_state", &GridWorld::goal_state);
    m.def("build_gridworld", [](int n, double gamma, std::uint64_t seed) {
        GridWorldSpec spec;
        spec.n = n;
        spec.gamma = gamma;
        spec.rng_seed = seed;
        return build_gridworld(spec);
    }, py::arg("n") = 10, py::arg("gamma") = 0.97, py::arg("seed") = 0);
    m.def("build_random_mdp", [](int n_states, int n_actions, double gamma, int branching, std::uint64_t seed) {
        return build_random_mdp({n_states, n_actions, gamma, branching, seed});
    }, py::arg("n_states"), py::arg("n_actions"), py::arg("gamma"), py::arg("branching") = 0,
       py::arg("seed") = 0);
    m.def("initial_value", &initial_value, py::arg("n_states"), py::arg("seed"));

    m.def("run", [](const Mdp& mdp, const ValueFunction& v0, const std::string& scheme, int h,
                    std::optional<int> steps, std::optional<double> lambda, double eps, double delta,
                    bool adversarial, std::uint64_t seed, std::optional<double> value_tol,
                    std::uint64_t query_budget, int max_iterations) {
        AlgoConfig cfg;
        cfg.scheme = parse_scheme(scheme);
        cfg.h = h;
        cfg.m = steps;
        cfg.lambda = lambda;
        cfg.eval_noise_bound = eps;
        cfg.greedy_noise_bound = delta;
        cfg.adversarial_greedy = adversarial;
        cfg.rng_seed = seed;
        cfg.stop.value_tol = value_tol;
        cfg.stop.query_budget = query_budget;
        cfg.stop.max_iterations = max_iterations;
        RunReport report;
        {
            py::gil_scoped_release release;
            report = run(mdp, v0, cfg);
        }
        return report_dict(report);
    }, py::arg("mdp"), py::arg("v0"), py::arg("scheme"), py::arg("h"), py::arg("m") = py::none(),
       py::arg("lam") = py::none(), py::arg("eps") = 0.0, py::arg("delta") = 0.0,
       py::arg("adversarial") = false, py::arg("seed") = 0, py::arg("value_tol") = py::none(),
       py::arg("query_budget") = 0, py::arg("max_iterations") = 100000);

    m.def("query_cost", [](const Mdp& mdp, const std::string& scheme, int h, std::optional<int> steps,
                           std::optional<double> lambda) {
        AlgoConfig cfg;
        cfg.scheme = parse_scheme(scheme);
        cfg.h = h;
        cfg.m = steps;
        cfg.lambda = lambda;
        return iteration_cost(mdp, cfg);
    }, py::arg("mdp"), py::arg("scheme"), py::arg("h"), py::arg("m") = py::none(), py::arg("lam") = py::none(),
       "Simulator calls charged for one iteration of the scheme.");
}
