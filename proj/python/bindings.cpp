#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rflin/covariates.hpp"
#include "rflin/dataset_io.hpp"
#include "rflin/errors.hpp"
#include "rflin/generators.hpp"
#include "rflin/harness.hpp"
#include "rflin/instance_io.hpp"
#include "rflin/linear_mdp.hpp"
#include "rflin/oracle.hpp"
#include "rflin/planner.hpp"
#include "rflin/precision_matrix.hpp"

namespace py = pybind11;
using namespace rflin;

namespace {

struct Partition {
  CoveringPartition part;
  std::int64_t simulator_episodes = 0;
};

std::vector<std::vector<int>> policy_actions(const PolicyTable& pi) {
  std::vector<std::vector<int>> out(pi.horizon(), std::vector<int>(pi.num_states(), -1));
  for (int h = 0; h < pi.horizon(); ++h)
    for (int s = 0; s < pi.num_states(); ++s) out[h][s] = pi.deterministic_action(h, s).value_or(-1);
  return out;
}

}  // namespace

PYBIND11_MODULE(rflin, m) {
  m.doc() = "Reward-free exploration and planning in linear MDPs";

  py::register_exception<ContractViolation>(m, "ContractViolation", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);

  py::class_<ValidationReport>(m, "ValidationReport")
      .def_readonly("passed", &ValidationReport::pass)
      .def_readonly("feature_norm_excess", &ValidationReport::feature_norm_excess)
      .def_readonly("min_probability", &ValidationReport::min_probability)
      .def_readonly("row_sum_error", &ValidationReport::row_sum_error)
      .def_readonly("theta_norm_excess", &ValidationReport::theta_norm_excess)
      .def_readonly("mu_norm_excess", &ValidationReport::mu_norm_excess)
      .def_readonly("reward_range_excess", &ValidationReport::reward_range_excess)
      .def_readonly("failures", &ValidationReport::failures);

  py::class_<LinearMDP>(m, "LinearMDP")
      .def(py::init<int, int, std::vector<std::string>, std::vector<std::string>, RowMatrix, std::vector<Matrix>,
                    std::vector<Vector>, int>(),
           py::arg("dim"), py::arg("horizon"), py::arg("states"), py::arg("actions"), py::arg("phi"), py::arg("mu"),
           py::arg("theta"), py::arg("initial_state") = 0)
      .def_property_readonly("dim", &LinearMDP::dim)
      .def_property_readonly("horizon", &LinearMDP::horizon)
      .def_property_readonly("num_states", &LinearMDP::num_states)
      .def_property_readonly("num_actions", &LinearMDP::num_actions)
      .def_property_readonly("initial_state", &LinearMDP::initial_state)
      .def_property_readonly("states", &LinearMDP::states)
      .def_property_readonly("actions", &LinearMDP::actions)
      .def_property_readonly("features", &LinearMDP::features)
      .def("feature", &LinearMDP::feature)
      .def("mu", py::overload_cast<int>(&LinearMDP::mu, py::const_))
      .def("theta", py::overload_cast<int>(&LinearMDP::theta, py::const_))
      .def("kernel", &LinearMDP::kernel)
      .def("rewards", &LinearMDP::rewards)
      .def("reward", &LinearMDP::reward)
      .def("pair_index", &LinearMDP::pair_index);

  m.def("validate", &validate);
  m.def("serialize", &serialize);
  m.def("deserialize", &deserialize);
  m.def("load_instance", &load_instance);
  m.def("save_instance", &save_instance);

  m.def(
      "step",
      [](const LinearMDP& mdp, int h, int s, int a, std::uint64_t seed) {
        Rng rng(seed);
        return step(mdp, h, s, a, rng);
      },
      py::arg("mdp"), py::arg("h"), py::arg("s"), py::arg("a"), py::arg("seed"));

  m.def(
      "random_linear_mdp",
      [](int dim, int horizon, int num_states, int num_actions, std::uint64_t seed) {
        Rng rng(seed, 1);
        return random_linear_mdp({dim, horizon, num_states, num_actions, 2.0}, rng);
      },
      py::arg("dim") = 4, py::arg("horizon") = 3, py::arg("num_states") = 6, py::arg("num_actions") = 3,
      py::arg("seed") = 0);
  m.def(
      "random_tabular_mdp",
      [](int num_states, int num_actions, int horizon, std::uint64_t seed) {
        Rng rng(seed, 1);
        return random_tabular_mdp({num_states, num_actions, horizon, 2.0}, rng);
      },
      py::arg("num_states") = 5, py::arg("num_actions") = 2, py::arg("horizon") = 3, py::arg("seed") = 0);
  m.def("tabular_embed", &tabular_embed, py::arg("num_states"), py::arg("num_actions"), py::arg("transitions"),
        py::arg("rewards"), py::arg("initial_state") = 0);
  m.def(
      "group_reach_instance",
      [](int num_actions, int states_per_group) { return group_reach_instance({num_actions, states_per_group}); },
      py::arg("num_actions") = 2, py::arg("states_per_group") = 2);
  m.def(
      "lower_bound_instance",
      [](int d, double K, std::vector<int> signs, int reward_steps, int extra_directions) {
        LowerBoundSpec spec;
        spec.d = d;
        spec.K = K;
        spec.signs = std::move(signs);
        spec.reward_steps = reward_steps;
        spec.extra_directions = extra_directions;
        return lower_bound_instance(spec);
      },
      py::arg("d"), py::arg("K"), py::arg("signs") = std::vector<int>{}, py::arg("reward_steps") = 2,
      py::arg("extra_directions") = 32);
  m.def("lower_bound_magnitude", &lower_bound_magnitude);
  m.def(
      "axis_reach_instance",
      [](int d, std::uint64_t seed) {
        Rng rng(seed, 1);
        return axis_reach_instance({d, 2, 3}, rng);
      },
      py::arg("d"), py::arg("seed") = 0);

  py::class_<PolicyTable>(m, "PolicyTable")
      .def(py::init<int, int, int>())
      .def_static("deterministic", &PolicyTable::deterministic)
      .def("prob", &PolicyTable::prob)
      .def("actions", &policy_actions, "greedy action per (h, s), -1 for stochastic rows");

  m.def(
      "value_iteration",
      [](const LinearMDP& mdp, std::optional<RewardTable> reward) {
        const auto vt = value_iteration_exact(mdp, reward);
        return py::make_tuple(vt.value(), vt.V, vt.Q);
      },
      py::arg("mdp"), py::arg("reward") = std::nullopt);
  m.def("evaluate_policy", &evaluate_policy, py::arg("mdp"), py::arg("policy"), py::arg("reward") = std::nullopt);
  m.def("native_rewards", &native_rewards);
  m.def("max_visitation", &max_visitation_pairs, py::arg("mdp"), py::arg("h"), py::arg("mask"));
  m.def(
      "best_mixture_min_eig",
      [](const LinearMDP& mdp, int h, std::int64_t budget) {
        const auto r = best_mixture_min_eig(mdp, h, budget);
        return py::make_tuple(r.value, r.weights);
      },
      py::arg("mdp"), py::arg("h"), py::arg("budget") = 100000);

  py::class_<PrecisionMatrix>(m, "PrecisionMatrix")
      .def(py::init<int, double>(), py::arg("dim"), py::arg("lam") = 1.0)
      .def("update", &PrecisionMatrix::update)
      .def("quad_form", &PrecisionMatrix::quad_form)
      .def("self_normalized_stat", &PrecisionMatrix::self_normalized_stat)
      .def_property_readonly("mat", &PrecisionMatrix::mat)
      .def_property_readonly("inv", &PrecisionMatrix::inv)
      .def_property_readonly("count", &PrecisionMatrix::count)
      .def_property_readonly("logdet", &PrecisionMatrix::logdet);
  m.def(
      "elliptic_potential_check",
      [](const std::vector<Vector>& phis, double lam) {
        const auto r = elliptic_potential_check(phis, lam);
        return py::make_tuple(r.lhs, r.bound, r.ok);
      },
      py::arg("phis"), py::arg("lam") = 1.0);

  m.def("beta", &beta, py::arg("d"), py::arg("horizon"), py::arg("k_max"), py::arg("delta"), py::arg("c"));
  m.def(
      "schedule_from_epsilon",
      [](double eps, int d, int horizon, double b) {
        const auto s = schedule_from_epsilon(eps, d, horizon, b);
        return py::make_tuple(s.iota, s.gamma_sq);
      },
      py::arg("epsilon"), py::arg("d"), py::arg("horizon"), py::arg("beta"));
  m.def(
      "k_schedule",
      [](int i, double gamma_sq, int m_epochs, double delta, int d, int horizon, double k_scale, double lam,
         bool force) {
        const RegMinSpec spec = force ? RegMinSpec::force(d, horizon, gamma_sq) : RegMinSpec::lsvi_standin();
        return k_schedule(i, gamma_sq, spec, m_epochs, delta, d, horizon, k_scale, lam);
      },
      py::arg("i"), py::arg("gamma_sq"), py::arg("m"), py::arg("delta"), py::arg("d"), py::arg("horizon"),
      py::arg("k_scale") = 1.0, py::arg("lam") = 1.0, py::arg("force") = false);

  py::class_<PlanConfig>(m, "PlanConfig")
      .def(py::init<>())
      .def_readwrite("epsilon", &PlanConfig::epsilon)
      .def_readwrite("delta", &PlanConfig::delta)
      .def_readwrite("bonus_scale", &PlanConfig::bonus_scale)
      .def_readwrite("k_scale", &PlanConfig::k_scale)
      .def_readwrite("k_cap", &PlanConfig::k_cap)
      .def_readwrite("lam", &PlanConfig::lambda);

  py::class_<ExplorationDataset>(m, "ExplorationDataset")
      .def_readonly("beta", &ExplorationDataset::beta)
      .def_readonly("iota", &ExplorationDataset::iota)
      .def_readonly("gamma_sq", &ExplorationDataset::gamma_sq)
      .def_readonly("k_max", &ExplorationDataset::k_max)
      .def_readonly("total_episodes", &ExplorationDataset::total_episodes)
      .def("record_count", &ExplorationDataset::record_count)
      .def("to_json", [](const ExplorationDataset& ds) { return serialize_dataset(ds); })
      .def_static("from_json", &deserialize_dataset);

  m.def(
      "explore",
      [](const LinearMDP& mdp, const PlanConfig& config, std::uint64_t seed) {
        PlanConfig c = config;
        c.regmin.bonus_scale = c.bonus_scale;
        Simulator sim(mdp);
        Rng rng(seed, 2);
        return rflin_explore(sim, c, rng);
      },
      py::arg("mdp"), py::arg("config") = PlanConfig{}, py::arg("seed") = 0);

  py::class_<PlanResult>(m, "PlanResult")
      .def_readonly("policy", &PlanResult::policy)
      .def_property_readonly("beta", [](const PlanResult& r) { return r.estimate.beta; })
      .def_property_readonly("q", [](const PlanResult& r) { return r.estimate.q; })
      .def_property_readonly("v", [](const PlanResult& r) { return r.estimate.v; })
      .def_property_readonly("w", [](const PlanResult& r) { return r.estimate.w; });
  m.def("plan", &rflin_plan, py::arg("dataset"), py::arg("reward"), py::arg("bonus_scale") = -1.0);
  m.def("suboptimality", &suboptimality);
  m.def("optimism_fraction", [](const LinearMDP& mdp, const PlanResult& r, const RewardTable& reward) {
    return optimism_fraction(mdp, r.estimate, reward);
  });
  m.def("chain_bound", [](const LinearMDP& mdp, const PlanResult& r) {
    return chain_bound(mdp, r.policy, r.estimate);
  });
  m.def(
      "random_reward",
      [](const LinearMDP& mdp, std::uint64_t seed) {
        Rng rng(seed, 3);
        return linear_rewards(mdp, random_reward_thetas(mdp, rng));
      },
      py::arg("mdp"), py::arg("seed") = 0);

  py::class_<Partition>(m, "CoveringPartition")
      .def_property_readonly("num_levels", [](const Partition& p) { return p.part.chain.num_levels(); })
      .def_property_readonly("K", [](const Partition& p) {
        std::vector<std::int64_t> k;
        for (const auto& l : p.part.levels) k.push_back(l.K);
        return k;
      })
      .def_property_readonly("episodes", [](const Partition& p) { return p.part.episodes(); })
      .def_readonly("simulator_episodes", &Partition::simulator_episodes)
      .def("level_of", [](const Partition& p, const Vector& phi) { return p.part.level_of(phi); });
  m.def(
      "cover_traj",
      [](const LinearMDP& mdp, int h, std::vector<double> gamma_sq, double delta, double k_scale,
         std::int64_t k_cap, double lam, double bonus_scale, std::uint64_t seed) {
        Simulator sim(mdp);
        Rng rng(seed, 2);
        RegMinConfig rc;
        rc.bonus_scale = bonus_scale;
        ToleranceSchedule sched{std::move(gamma_sq), k_scale, k_cap, lam};
        Partition out{cover_traj(sim, h, delta, sched, rc, rng), 0};
        out.simulator_episodes = sim.episodes();
        return out;
      },
      py::arg("mdp"), py::arg("h"), py::arg("gamma_sq"), py::arg("delta") = 0.1, py::arg("k_scale") = 0.01,
      py::arg("k_cap") = 2000, py::arg("lam") = 1.0, py::arg("bonus_scale") = 0.1, py::arg("seed") = 0);

  m.def("eig_min", &eig_min);
  m.def(
      "collect_well_conditioned",
      [](const LinearMDP& mdp, int h, double epsilon, double gamma_sq, double delta, double k_scale,
         std::int64_t k_cap, std::uint64_t seed) {
        Simulator sim(mdp);
        Rng rng(seed, 2);
        CovariateOptions opts;
        opts.k_scale = k_scale;
        opts.k_cap = k_cap;
        const auto c = collect_well_conditioned(sim, h, epsilon, gamma_sq, delta, RegMinConfig{}, opts, rng).certificate;
        py::dict d;
        d["lambda_min"] = c.lambda_min;
        d["target"] = c.target;
        d["target_strong"] = c.target_strong;
        d["passed"] = c.passed();
        d["m"] = c.m;
        d["lambda"] = c.lambda;
        d["records"] = c.records;
        d["premise_value"] = c.premise_value;
        d["pooled_gram"] = c.pooled_gram;
        return d;
      },
      py::arg("mdp"), py::arg("h"), py::arg("epsilon"), py::arg("gamma_sq"), py::arg("delta") = 0.1,
      py::arg("k_scale") = 0.01, py::arg("k_cap") = 2000, py::arg("seed") = 0);

  m.def(
      "run_experiment",
      [](const std::string& config_json) { return records_csv(run_experiment(parse_config(config_json))); },
      "Runs a JSON experiment config and returns the records as CSV text.");
}
