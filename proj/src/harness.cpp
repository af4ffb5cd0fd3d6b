#include "rflin/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "json.hpp"
#include "rflin/errors.hpp"
#include "rflin/exploration.hpp"
#include "rflin/instance_io.hpp"
#include "rflin/oracle.hpp"

namespace rflin {
namespace {

using nlohmann::json;

// Typed access to one JSON object; remembers which keys were read so the
// leftovers can be reported.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj.is_object()) throw ConfigError(where("") + "expected an object");
  }

  bool has(const char* key) const { return obj_.contains(key); }

  double number(const char* key, double fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(where(key) + "expected a number");
    return v->get<double>();
  }

  std::int64_t integer(const char* key, std::int64_t fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(where(key) + "expected an integer");
    return v->get<std::int64_t>();
  }

  bool boolean(const char* key, bool fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(where(key) + "expected true or false");
    return v->get<bool>();
  }

  std::string text(const char* key, const std::string& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(where(key) + "expected a string");
    return v->get<std::string>();
  }

  template <class T>
  std::vector<T> list(const char* key, const std::vector<T>& fallback) {
    const json* v = get(key);
    if (!v) return fallback;
    if (!v->is_array()) throw ConfigError(where(key) + "expected an array");
    std::vector<T> out;
    for (const auto& e : *v) {
      if constexpr (std::is_floating_point_v<T>) {
        if (!e.is_number()) throw ConfigError(where(key) + "expected numbers");
      } else {
        if (!e.is_number_integer()) throw ConfigError(where(key) + "expected integers");
        if (std::is_unsigned_v<T> && e.is_number_integer() && !e.is_number_unsigned())
          throw ConfigError(where(key) + "expected non-negative integers");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

  Section child(const char* key) {
    const json* v = get(key);
    if (!v) throw ConfigError(where(key) + "missing");
    return Section(*v, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!used_.count(it.key())) throw ConfigError(where(it.key().c_str()) + "unknown key");
  }

  std::string where(const char* key) const {
    std::string p = path_;
    if (*key) p = p.empty() ? key : p + "." + key;
    return p.empty() ? "config: " : "config: " + p + ": ";
  }

 private:
  const json* get(const char* key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

InstanceSpec parse_instance(Section s) {
  InstanceSpec spec;
  spec.generator = s.text("generator", "random");
  if (s.has("instance_seed")) spec.instance_seed = static_cast<std::uint64_t>(s.integer("instance_seed", 0));
  const auto& g = spec.generator;
  if (g == "random") {
    auto& r = spec.random;
    r.dim = static_cast<int>(s.integer("dim", r.dim));
    r.horizon = static_cast<int>(s.integer("horizon", r.horizon));
    r.num_states = static_cast<int>(s.integer("num_states", r.num_states));
    r.num_actions = static_cast<int>(s.integer("num_actions", r.num_actions));
    r.sparsity = s.number("sparsity", r.sparsity);
  } else if (g == "tabular") {
    auto& r = spec.tabular;
    r.num_states = static_cast<int>(s.integer("num_states", r.num_states));
    r.num_actions = static_cast<int>(s.integer("num_actions", r.num_actions));
    r.horizon = static_cast<int>(s.integer("horizon", r.horizon));
    r.sparsity = s.number("sparsity", r.sparsity);
  } else if (g == "group_reach") {
    auto& r = spec.group_reach;
    r.num_actions = static_cast<int>(s.integer("num_actions", r.num_actions));
    r.states_per_group = static_cast<int>(s.integer("states_per_group", r.states_per_group));
  } else if (g == "lower_bound") {
    auto& r = spec.lower_bound;
    r.d = static_cast<int>(s.integer("d", r.d));
    r.K = s.number("K", static_cast<double>(r.d) * r.d);
    for (auto v : s.list<std::int64_t>("signs", {})) r.signs.push_back(static_cast<int>(v));
    r.reward_steps = static_cast<int>(s.integer("reward_steps", r.reward_steps));
    r.extra_directions = static_cast<int>(s.integer("extra_directions", r.extra_directions));
    r.include_diagonals = s.boolean("include_diagonals", r.include_diagonals);
    r.net_seed = static_cast<std::uint64_t>(s.integer("net_seed", 0));
  } else if (g == "axis_reach") {
    auto& r = spec.axis_reach;
    r.d = static_cast<int>(s.integer("d", r.d));
    r.distractors = static_cast<int>(s.integer("distractors", r.distractors));
    r.intermediate_states = static_cast<int>(s.integer("intermediate_states", r.intermediate_states));
  } else if (g == "file") {
    spec.path = s.text("path", "");
    if (spec.path.empty()) throw ConfigError(s.where("path") + "required for generator 'file'");
  } else {
    throw ConfigError(s.where("generator") + "unknown generator '" + g + "'");
  }
  s.finish();
  return spec;
}

SweepSpec parse_sweep(Section s) {
  SweepSpec sw;
  sw.dims = s.list<int>("dims", sw.dims);
  sw.budgets = s.list<std::int64_t>("budgets", sw.budgets);
  sw.target_epsilon = s.number("target_epsilon", sw.target_epsilon);
  sw.reward_steps = static_cast<int>(s.integer("reward_steps", sw.reward_steps));
  sw.extra_directions = static_cast<int>(s.integer("extra_directions", sw.extra_directions));
  s.finish();
  return sw;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

void ExperimentConfig::check() const {
  static const std::set<std::string> algorithms{"explore-plan", "covertraj", "covariates", "lowerbound-sweep"};
  if (!algorithms.count(algorithm)) throw ConfigError("config: algorithm: unknown algorithm '" + algorithm + "'");
  if (seeds.empty()) throw ConfigError("config: seeds: must not be empty");
  if (!(epsilon > 0.0)) throw ConfigError("config: epsilon: must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("config: delta: must lie in (0,1)");
  if (!(k_scale > 0.0)) throw ConfigError("config: k_scale: must be > 0");
  if (k_cap < 0) throw ConfigError("config: k_cap: must be >= 0");
  if (!(bonus_scale > 0.0)) throw ConfigError("config: bonus_scale: must be > 0");
  if (!(lambda > 0.0)) throw ConfigError("config: lambda: must be > 0");
  if (num_reward_functions < 1) throw ConfigError("config: num_reward_functions: must be >= 1");
  for (double c : check_bonus_scales)
    if (!(c > 0.0)) throw ConfigError("config: check_bonus_scales: entries must be > 0");
  if (step < 0) throw ConfigError("config: step: must be >= 0");
  if (m < 1) throw ConfigError("config: m: must be >= 1");
  if (!(gamma_sq > 0.0 && gamma_sq <= 1.0)) throw ConfigError("config: gamma_sq: must lie in (0,1]");
  if (threads < 0) throw ConfigError("config: threads: must be >= 0");
  if (algorithm == "lowerbound-sweep") {
    if (sweep.dims.empty() || sweep.budgets.empty()) throw ConfigError("config: sweep: dims and budgets must be non-empty");
    for (int d : sweep.dims)
      if (d < 2) throw ConfigError("config: sweep.dims: entries must be >= 2");
    if (!(sweep.target_epsilon > 0.0)) throw ConfigError("config: sweep.target_epsilon: must be > 0");
    if (sweep.reward_steps < 1) throw ConfigError("config: sweep.reward_steps: must be >= 1");
  }
}

RegMinConfig ExperimentConfig::regmin_config() const {
  RegMinConfig r;
  r.bonus_scale = bonus_scale;
  r.rare_switching = rare_switching;
  return r;
}

PlanConfig ExperimentConfig::plan_config() const {
  PlanConfig p;
  p.epsilon = epsilon;
  p.delta = delta;
  p.bonus_scale = bonus_scale;
  p.k_scale = k_scale;
  p.k_cap = k_cap;
  p.lambda = lambda;
  p.regmin = regmin_config();
  return p;
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  Section s(doc, "");
  const auto version = s.integer("version", -1);
  if (version != 1) throw ConfigError("config: version: expected 1");
  ExperimentConfig c;
  if (s.has("instance")) c.instance = parse_instance(s.child("instance"));
  c.algorithm = s.text("algorithm", c.algorithm);
  c.epsilon = s.number("epsilon", c.epsilon);
  c.delta = s.number("delta", c.delta);
  c.k_scale = s.number("k_scale", c.k_scale);
  c.k_cap = s.integer("k_cap", c.k_cap);
  c.bonus_scale = s.number("bonus_scale", c.bonus_scale);
  c.lambda = s.number("lambda", c.lambda);
  c.rare_switching = s.boolean("rare_switching", c.rare_switching);
  c.seeds = s.list<std::uint64_t>("seeds", c.seeds);
  c.num_reward_functions = static_cast<int>(s.integer("num_reward_functions", c.num_reward_functions));
  c.check_bonus_scales = s.list<double>("check_bonus_scales", c.check_bonus_scales);
  c.step = static_cast<int>(s.integer("step", c.step));
  c.m = static_cast<int>(s.integer("m", c.m));
  c.gamma_sq = s.number("gamma_sq", c.gamma_sq);
  if (s.has("sweep")) c.sweep = parse_sweep(s.child("sweep"));
  c.output = s.text("output", c.output);
  c.record_timing = s.boolean("record_timing", c.record_timing);
  c.threads = static_cast<int>(s.integer("threads", c.threads));
  s.finish();
  c.check();
  return c;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

LinearMDP make_instance(const InstanceSpec& spec, std::uint64_t seed) {
  Rng rng(spec.instance_seed.value_or(seed), 1);
  const auto& g = spec.generator;
  if (g == "random") return random_linear_mdp(spec.random, rng);
  if (g == "tabular") return random_tabular_mdp(spec.tabular, rng);
  if (g == "group_reach") return group_reach_instance(spec.group_reach);
  if (g == "lower_bound") return lower_bound_instance(spec.lower_bound);
  if (g == "axis_reach") return axis_reach_instance(spec.axis_reach, rng);
  if (g == "file") return load_instance(spec.path);
  throw ConfigError("unknown generator '" + g + "'");
}

namespace {

void run_explore_plan(const ExperimentConfig& config, const LinearMDP& mdp, std::uint64_t seed, RunRecord& rec) {
  Simulator sim(mdp);
  Rng rng(seed, 2);
  const ExplorationDataset ds = rflin_explore(sim, config.plan_config(), rng);
  rec.episodes_used = ds.total_episodes;
  rec.simulator_episodes = sim.episodes();

  Rng reward_rng(seed, 3);
  rec.check_bonus_scales = config.check_bonus_scales;
  rec.check_optimism.assign(config.check_bonus_scales.size(), 0.0);
  std::vector<int> optimistic(config.check_bonus_scales.size(), 0), chain_ok(config.check_bonus_scales.size(), 0);
  double optimism = 0.0;
  for (int r = 0; r < config.num_reward_functions; ++r) {
    const RewardTable reward = linear_rewards(mdp, random_reward_thetas(mdp, reward_rng));
    const PlanResult plan = rflin_plan(ds, reward);
    rec.suboptimality.push_back(suboptimality(mdp, plan.policy, reward));
    optimism += optimism_fraction(mdp, plan.estimate, reward);
    for (std::size_t c = 0; c < config.check_bonus_scales.size(); ++c) {
      const PlanResult pc = rflin_plan(ds, reward, config.check_bonus_scales[c]);
      const double frac = optimism_fraction(mdp, pc.estimate, reward);
      rec.check_optimism[c] += frac / config.num_reward_functions;
      if (frac == 1.0) {
        ++optimistic[c];
        if (suboptimality(mdp, pc.policy, reward) <= chain_bound(mdp, pc.policy, pc.estimate) + 1e-8) ++chain_ok[c];
      }
    }
  }
  rec.optimism_fraction = optimism / config.num_reward_functions;
  for (std::size_t c = 0; c < optimistic.size(); ++c)
    rec.check_chain_ok.push_back(optimistic[c] ? static_cast<double>(chain_ok[c]) / optimistic[c]
                                               : std::numeric_limits<double>::quiet_NaN());
}

void run_covertraj(const ExperimentConfig& config, const LinearMDP& mdp, std::uint64_t seed, RunRecord& rec) {
  if (config.step >= mdp.horizon()) throw ConfigError("config: step: beyond the instance horizon");
  Simulator sim(mdp);
  Rng rng(seed, 2);
  ToleranceSchedule schedule{std::vector<double>(config.m, config.gamma_sq), config.k_scale, config.k_cap, config.lambda};
  const CoveringPartition part = cover_traj(sim, config.step, config.delta, schedule, config.regmin_config(), rng);
  rec.episodes_used = part.episodes();
  rec.simulator_episodes = sim.episodes();

  const auto& uniq = mdp.unique_features();
  std::vector<int> level(uniq.rows());
  for (Eigen::Index u = 0; u < uniq.rows(); ++u) {
    level[u] = part.level_of(uniq.row(u).transpose());
    if (level[u] <= part.chain.num_levels()) {
      const auto& lv = part.chain.level(level[u]);
      if (quad_form(lv.inv, uniq.row(u).transpose()) > lv.gamma_sq) rec.quad_postcondition = false;
    }
  }
  auto visitation = [&](int i) {
    std::vector<char> mask(mdp.num_pairs());
    for (int p = 0; p < mdp.num_pairs(); ++p) mask[p] = level[mdp.feature_id(p)] == i ? 1 : 0;
    return max_visitation_pairs(mdp, config.step, mask);
  };
  for (int i = 1; i <= part.chain.num_levels(); ++i)
    rec.levels.push_back(LevelStat{visitation(i), part.levels[i - 1].gamma_sq, part.levels[i - 1].K,
                                   std::ldexp(1.0, -i + 1)});
  rec.remainder_visitation = visitation(part.chain.num_levels() + 1);
  rec.remainder_bound = std::ldexp(1.0, -part.chain.num_levels());
}

void run_covariates(const ExperimentConfig& config, const LinearMDP& mdp, std::uint64_t seed, RunRecord& rec) {
  if (config.step >= mdp.horizon()) throw ConfigError("config: step: beyond the instance horizon");
  Simulator sim(mdp);
  Rng rng(seed, 2);
  CovariateOptions opts;
  opts.k_scale = config.k_scale;
  opts.k_cap = config.k_cap;
  const auto res = collect_well_conditioned(sim, config.step, config.epsilon, config.gamma_sq, config.delta,
                                            config.regmin_config(), opts, rng);
  rec.episodes_used = res.partition.episodes();
  rec.simulator_episodes = sim.episodes();
  rec.certificate = res.certificate;
}

void run_lowerbound_sweep(const ExperimentConfig& config, std::uint64_t seed, RunRecord& rec) {
  for (int d : config.sweep.dims) {
    Rng sign_rng(seed, 4);
    LowerBoundSpec spec;
    spec.d = d;
    spec.K = static_cast<double>(d) * d;
    for (int j = 0; j < d; ++j) spec.signs.push_back(sign_rng.below(2) ? 1 : -1);
    spec.reward_steps = config.sweep.reward_steps;
    spec.extra_directions = config.sweep.extra_directions;
    spec.net_seed = seed;
    const LinearMDP mdp = lower_bound_instance(spec);
    // s0 features carry negative coordinates; s0 is never occupied after step 0.
    RewardTable reward = native_rewards(mdp);
    for (int h = 0; h < mdp.horizon(); ++h) {
      std::vector<char> live(mdp.num_states(), 0);
      for (int s : mdp.reachable()[h]) live[s] = 1;
      for (int s = 0; s < mdp.num_states(); ++s)
        if (!live[s])
          for (int a = 0; a < mdp.num_actions(); ++a) reward[h](mdp.pair_index(s, a)) = 0.0;
    }

    // Smallest budget from which every larger budget also reaches the target.
    double found = std::numeric_limits<double>::infinity();
    std::int64_t spent = 0;
    for (auto it = config.sweep.budgets.rbegin(); it != config.sweep.budgets.rend(); ++it) {
      PlanConfig pc = config.plan_config();
      pc.epsilon = config.sweep.target_epsilon;
      pc.k_cap = *it;
      Simulator sim(mdp);
      Rng rng(seed, 5 + static_cast<std::uint64_t>(d));
      const ExplorationDataset ds = rflin_explore(sim, pc, rng);
      spent += sim.episodes();
      const PlanResult plan = rflin_plan(ds, reward);
      if (suboptimality(mdp, plan.policy, reward) > config.sweep.target_epsilon) break;
      found = static_cast<double>(ds.total_episodes);
    }
    rec.sweep_dims.push_back(d);
    rec.episodes_to_target.push_back(found);
    rec.episodes_used += spent;
    rec.simulator_episodes += spent;
  }
}

}  // namespace

RunRecord run_single(const ExperimentConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.seed = seed;
  rec.algorithm = config.algorithm;
  if (config.algorithm == "lowerbound-sweep") {
    run_lowerbound_sweep(config, seed, rec);
  } else {
    const LinearMDP mdp = make_instance(config.instance, seed);
    if (config.algorithm == "explore-plan")
      run_explore_plan(config, mdp, seed, rec);
    else if (config.algorithm == "covertraj")
      run_covertraj(config, mdp, seed, rec);
    else
      run_covariates(config, mdp, seed, rec);
  }
  if (config.record_timing)
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.check();
  const std::size_t n = config.seeds.size();
  std::vector<RunRecord> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::size_t workers = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                           : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = run_single(config, config.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

CsvTable records_table(const std::vector<RunRecord>& records) {
  CsvTable t;
  t.header = {"seed", "algorithm", "episodes_used", "simulator_episodes"};
  if (records.empty()) return t;
  const RunRecord& shape = records.front();
  for (std::size_t r = 0; r < shape.suboptimality.size(); ++r) t.header.push_back(fmt::format("suboptimality_{}", r));
  if (!shape.suboptimality.empty()) t.header.push_back("optimism_fraction");
  for (double c : shape.check_bonus_scales) {
    t.header.push_back(fmt::format("optimism_fraction_c{}", csv_number(c)));
    t.header.push_back(fmt::format("chain_ok_c{}", csv_number(c)));
  }
  for (std::size_t i = 0; i < shape.levels.size(); ++i) {
    t.header.push_back(fmt::format("level{}_max_visitation", i + 1));
    t.header.push_back(fmt::format("level{}_bound", i + 1));
    t.header.push_back(fmt::format("level{}_gamma_sq", i + 1));
    t.header.push_back(fmt::format("level{}_K", i + 1));
  }
  if (!shape.levels.empty()) {
    t.header.insert(t.header.end(), {"remainder_visitation", "remainder_bound", "quad_postcondition"});
  }
  if (shape.certificate)
    t.header.insert(t.header.end(), {"lambda_min", "target", "target_strong", "passed", "epsilon", "gamma_sq", "m",
                                     "lambda", "records", "premise_value"});
  for (int d : shape.sweep_dims) t.header.push_back(fmt::format("episodes_to_target_d{}", d));
  if (!std::isnan(shape.wall_time_ms)) t.header.push_back("wall_time_ms");

  for (const auto& rec : records) {
    std::vector<std::string> row{std::to_string(rec.seed), rec.algorithm, std::to_string(rec.episodes_used),
                                 std::to_string(rec.simulator_episodes)};
    for (double v : rec.suboptimality) row.push_back(csv_number(v));
    if (!rec.suboptimality.empty()) row.push_back(csv_number(rec.optimism_fraction));
    for (std::size_t c = 0; c < rec.check_bonus_scales.size(); ++c) {
      row.push_back(csv_number(rec.check_optimism[c]));
      row.push_back(csv_number(rec.check_chain_ok[c]));
    }
    for (const auto& l : rec.levels) {
      row.push_back(csv_number(l.max_visitation));
      row.push_back(csv_number(l.bound));
      row.push_back(csv_number(l.gamma_sq));
      row.push_back(std::to_string(l.K));
    }
    if (!rec.levels.empty()) {
      row.push_back(csv_number(rec.remainder_visitation));
      row.push_back(csv_number(rec.remainder_bound));
      row.push_back(rec.quad_postcondition ? "1" : "0");
    }
    if (rec.certificate) {
      const auto& c = *rec.certificate;
      for (double v : {c.lambda_min, c.target, c.target_strong}) row.push_back(csv_number(v));
      row.push_back(c.passed() ? "1" : "0");
      for (double v : {c.epsilon_used, c.gamma_sq}) row.push_back(csv_number(v));
      row.push_back(std::to_string(c.m));
      row.push_back(csv_number(c.lambda));
      row.push_back(std::to_string(c.records));
      row.push_back(csv_number(c.premise_value));
    }
    for (double v : rec.episodes_to_target) row.push_back(csv_number(v));
    if (!std::isnan(shape.wall_time_ms)) row.push_back(csv_number(rec.wall_time_ms));
    if (row.size() != t.header.size() || rec.algorithm != shape.algorithm)
      throw std::invalid_argument("emit_csv: records are not homogeneous");
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string records_csv(const std::vector<RunRecord>& records) { return write_csv(records_table(records)); }

void emit_csv(const std::vector<RunRecord>& records, const std::string& path) {
  const std::string text = records_csv(records);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace rflin
