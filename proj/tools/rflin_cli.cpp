// Command-line driver: gen, validate, explore, plan, covertraj, covariates,
// lowerbound, sweep. Exit codes: 0 ok, 1 other failure, 2 config error,
// 3 contract violation.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "rflin/dataset_io.hpp"
#include "rflin/errors.hpp"
#include "rflin/harness.hpp"
#include "rflin/instance_io.hpp"

namespace {

struct Common {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::optional<double> k_scale;
  std::optional<double> bonus_scale;
};

void add_common(CLI::App* cmd, Common& c, bool need_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "experiment config (JSON)");
  if (need_config) opt->required();
  cmd->add_option("--seed", c.seeds, "comma-separated seeds (overrides the config)")->delimiter(',');
  cmd->add_option("--out", c.out, "output path");
  cmd->add_option("--k-scale", c.k_scale, "multiplier on the theoretical episode schedule");
  cmd->add_option("--bonus-scale", c.bonus_scale, "scale c of the bonus beta");
}

rflin::ExperimentConfig resolve(const Common& c, const std::string& algorithm = "") {
  rflin::ExperimentConfig cfg = rflin::load_config(c.config);
  if (!algorithm.empty()) cfg.algorithm = algorithm;
  if (!c.seeds.empty()) cfg.seeds = c.seeds;
  if (c.k_scale) cfg.k_scale = *c.k_scale;
  if (c.bonus_scale) cfg.bonus_scale = *c.bonus_scale;
  if (!c.out.empty()) cfg.output = c.out;
  cfg.check();
  return cfg;
}

void write_records(const rflin::ExperimentConfig& cfg) {
  const auto records = rflin::run_experiment(cfg);
  if (cfg.output.empty() || cfg.output == "-")
    std::cout << rflin::records_csv(records);
  else
    rflin::emit_csv(records, cfg.output);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reward-free exploration toolkit for linear MDPs"};
  app.require_subcommand(1);

  Common gen_opts, explore_opts, run_opts[4];
  auto* gen = app.add_subcommand("gen", "generate an instance document from a config's instance section");
  add_common(gen, gen_opts);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check the linear-MDP invariants of an instance document");
  validate->add_option("instance", validate_path, "instance document")->required();

  auto* explore = app.add_subcommand("explore", "run reward-free exploration and write the dataset");
  add_common(explore, explore_opts);

  std::string plan_dataset, plan_reward, plan_out;
  std::optional<double> plan_bonus;
  auto* plan = app.add_subcommand("plan", "plan for a reward on a stored dataset and write the policy CSV");
  plan->add_option("--dataset", plan_dataset, "dataset document")->required();
  plan->add_option("--reward", plan_reward, "reward document ({\"theta\": ...} or {\"table\": ...})")->required();
  plan->add_option("--out", plan_out, "policy CSV path");
  plan->add_option("--bonus-scale", plan_bonus, "scale c of the planning bonus");

  const char* names[4] = {"covertraj", "covariates", "lowerbound", "sweep"};
  const char* algos[4] = {"covertraj", "covariates", "lowerbound-sweep", ""};
  const char* help[4] = {"run CoverTraj and report oracle visitation per level",
                         "collect well-conditioned covariates and report the certificate",
                         "episodes-to-epsilon sweep on the lower-bound family",
                         "run the config's algorithm over all seeds"};
  CLI::App* runs[4];
  for (int i = 0; i < 4; ++i) {
    runs[i] = app.add_subcommand(names[i], help[i]);
    add_common(runs[i], run_opts[i]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*gen) {
      const auto cfg = resolve(gen_opts);
      const auto mdp = rflin::make_instance(cfg.instance, cfg.seeds.front());
      const std::string text = rflin::serialize(mdp);
      if (gen_opts.out.empty() || gen_opts.out == "-")
        std::cout << text;
      else
        rflin::save_instance(mdp, gen_opts.out);
      return 0;
    }
    if (*validate) {
      const auto mdp = rflin::load_instance(validate_path);
      const auto report = rflin::validate(mdp);
      std::cout << fmt::format(
          "{}\nfeature_norm_excess {:.3g}\nmin_probability {:.3g}\nrow_sum_error {:.3g}\ntheta_norm_excess {:.3g}\n"
          "mu_norm_excess {:.3g}\nreward_range_excess {:.3g}\nreachable_rows {}\nunreachable_invalid_rows {}\n",
          report.pass ? "PASS" : "FAIL", report.feature_norm_excess, report.min_probability, report.row_sum_error,
          report.theta_norm_excess, report.mu_norm_excess, report.reward_range_excess, report.reachable_rows,
          report.unreachable_invalid_rows);
      for (const auto& f : report.failures) std::cout << "failure: " << f << "\n";
      return report.pass ? 0 : 1;
    }
    if (*explore) {
      const auto cfg = resolve(explore_opts);
      if (cfg.output.empty()) throw rflin::ConfigError("explore: --out (or config output) is required");
      const auto mdp = rflin::make_instance(cfg.instance, cfg.seeds.front());
      rflin::Simulator sim(mdp);
      rflin::Rng rng(cfg.seeds.front(), 2);
      const auto ds = rflin::rflin_explore(sim, cfg.plan_config(), rng);
      rflin::save_dataset(ds, cfg.output);
      std::cerr << fmt::format("episodes {}\n", ds.total_episodes);
      return 0;
    }
    if (*plan) {
      const auto ds = rflin::load_dataset(plan_dataset);
      const auto reward = rflin::load_reward(plan_reward, ds.horizon, ds.num_states, ds.num_actions, ds.features);
      const auto result = rflin::rflin_plan(ds, reward, plan_bonus.value_or(-1.0));
      if (plan_out.empty() || plan_out == "-")
        std::cout << rflin::policy_csv(result.policy);
      else
        rflin::save_policy_csv(result.policy, plan_out);
      return 0;
    }
    for (int i = 0; i < 4; ++i) {
      if (*runs[i]) {
        write_records(resolve(run_opts[i], algos[i]));
        return 0;
      }
    }
  } catch (const rflin::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const rflin::ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
