#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rflin/covariates.hpp"
#include "rflin/csv.hpp"
#include "rflin/generators.hpp"
#include "rflin/linear_mdp.hpp"
#include "rflin/planner.hpp"

namespace rflin {

/// Which MDP a run uses. Generated instances are drawn from
/// Rng(instance_seed or run seed, 1).
struct InstanceSpec {
  std::string generator = "random";  // random | tabular | group_reach | lower_bound | axis_reach | file
  RandomMdpSpec random;
  RandomTabularSpec tabular;
  GroupReachSpec group_reach;
  LowerBoundSpec lower_bound;
  AxisReachSpec axis_reach;
  std::string path;
  std::optional<std::uint64_t> instance_seed;
};

struct SweepSpec {
  std::vector<int> dims{2, 4, 8};
  std::vector<std::int64_t> budgets{4, 8, 16, 32, 64, 128, 256, 512, 1024};
  double target_epsilon = 0.2;
  int reward_steps = 8;
  int extra_directions = 8;
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::string algorithm = "explore-plan";  // explore-plan | covertraj | covariates | lowerbound-sweep
  double epsilon = 0.25;
  double delta = 0.1;
  double k_scale = 0.01;
  std::int64_t k_cap = 2000;
  double bonus_scale = 0.1;
  double lambda = 1.0;
  bool rare_switching = true;
  std::vector<std::uint64_t> seeds{0};
  int num_reward_functions = 5;
  std::vector<double> check_bonus_scales{1.0};
  int step = 0;
  int m = 4;
  double gamma_sq = 0.05;
  SweepSpec sweep;
  std::string output;
  bool record_timing = false;
  int threads = 0;  // 0 = hardware concurrency

  void check() const;
  PlanConfig plan_config() const;
  RegMinConfig regmin_config() const;
};

/// Parses a JSON config document ("version": 1). Unknown keys, wrong types
/// and out-of-range values throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

LinearMDP make_instance(const InstanceSpec& spec, std::uint64_t seed);

struct LevelStat {
  double max_visitation = 0.0;
  double gamma_sq = 0.0;
  std::int64_t K = 0;
  double bound = 0.0;  // 2^{-i+1}
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::string algorithm;
  std::int64_t episodes_used = 0;
  std::int64_t simulator_episodes = 0;

  // explore-plan
  std::vector<double> suboptimality;
  double optimism_fraction = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> check_bonus_scales;
  std::vector<double> check_optimism;   // mean over reward functions
  std::vector<double> check_chain_ok;   // fraction of optimistic rewards where the chain bound held

  // covertraj
  std::vector<LevelStat> levels;
  double remainder_visitation = std::numeric_limits<double>::quiet_NaN();
  double remainder_bound = std::numeric_limits<double>::quiet_NaN();
  bool quad_postcondition = true;

  // covariates
  std::optional<CovariateCertificate> certificate;

  // lowerbound-sweep: episodes until the plan is target-optimal, per d (inf if never)
  std::vector<int> sweep_dims;
  std::vector<double> episodes_to_target;

  double wall_time_ms = std::numeric_limits<double>::quiet_NaN();
};

RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed);

/// One record per seed, in seed order; seeds run on a worker pool.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

CsvTable records_table(const std::vector<RunRecord>& records);
std::string records_csv(const std::vector<RunRecord>& records);
void emit_csv(const std::vector<RunRecord>& records, const std::string& path);

}  // namespace rflin
