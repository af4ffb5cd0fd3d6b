#include "rflin/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "rflin/errors.hpp"

namespace rflin {
namespace {

using nlohmann::json;

std::string num(double x) {
  if (x == 0.0 && std::signbit(x)) return "-0.0";
  return fmt::format("{:.17g}", x);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(e.what());
  }
}

const json& field(const json& obj, const char* key) {
  if (!obj.is_object()) throw ParseError(fmt::format("expected an object holding '{}'", key));
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(fmt::format("missing field '{}'", key));
  return *it;
}

double to_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

std::int64_t to_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<std::int64_t>();
}

const json& to_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  return j;
}

}  // namespace

std::string serialize_dataset(const ExplorationDataset& ds) {
  std::string out = "{\n  \"version\": 1,\n";
  out += fmt::format("  \"d\": {},\n  \"H\": {},\n  \"num_states\": {},\n  \"num_actions\": {},\n", ds.d,
                     ds.horizon, ds.num_states, ds.num_actions);
  out += fmt::format("  \"beta\": {},\n  \"delta\": {},\n  \"bonus_scale\": {},\n  \"k_max\": {},\n",
                     num(ds.beta), num(ds.delta), num(ds.bonus_scale), num(ds.k_max));
  out += fmt::format("  \"iota\": {},\n  \"total_episodes\": {},\n", ds.iota, ds.total_episodes);
  out += "  \"gamma_sq\": [";
  for (std::size_t i = 0; i < ds.gamma_sq.size(); ++i) out += (i ? ", " : "") + num(ds.gamma_sq[i]);
  out += "],\n  \"features\": [\n";
  for (Eigen::Index p = 0; p < ds.features.rows(); ++p) {
    out += "    [";
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) out += (j ? ", " : "") + num(ds.features(p, j));
    out += p + 1 < ds.features.rows() ? "],\n" : "]\n";
  }
  out += "  ],\n  \"partitions\": [\n";
  for (std::size_t h = 0; h < ds.partitions.size(); ++h) {
    const auto& part = ds.partitions[h];
    out += fmt::format("    {{\"h\": {}, \"lambda\": {}, \"levels\": [\n", part.h, num(part.lambda));
    for (std::size_t i = 0; i < part.levels.size(); ++i) {
      const auto& level = part.levels[i];
      out += fmt::format("      {{\"gamma_sq\": {}, \"K\": {}, \"records\": [", num(level.gamma_sq), level.K);
      for (std::size_t r = 0; r < level.data.size(); ++r) {
        const auto& rec = level.data[r];
        out += fmt::format("{}[{}, {}, {}]", r ? ", " : "", rec.s, rec.a, rec.s_next);
      }
      out += i + 1 < part.levels.size() ? "]},\n" : "]}\n";
    }
    out += h + 1 < ds.partitions.size() ? "    ]},\n" : "    ]}\n";
  }
  out += "  ]\n}\n";
  return out;
}

ExplorationDataset deserialize_dataset(const std::string& text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ParseError("dataset document must be a JSON object");
  if (to_int(field(doc, "version"), "version") != 1) throw ParseError("version: unsupported dataset version");
  ExplorationDataset ds;
  ds.d = static_cast<int>(to_int(field(doc, "d"), "d"));
  ds.horizon = static_cast<int>(to_int(field(doc, "H"), "H"));
  ds.num_states = static_cast<int>(to_int(field(doc, "num_states"), "num_states"));
  ds.num_actions = static_cast<int>(to_int(field(doc, "num_actions"), "num_actions"));
  if (ds.d < 1 || ds.horizon < 1 || ds.num_states < 1 || ds.num_actions < 1)
    throw ParseError("d, H, num_states and num_actions must be >= 1");
  ds.beta = to_double(field(doc, "beta"), "beta");
  ds.delta = to_double(field(doc, "delta"), "delta");
  ds.bonus_scale = to_double(field(doc, "bonus_scale"), "bonus_scale");
  ds.k_max = to_double(field(doc, "k_max"), "k_max");
  ds.iota = static_cast<int>(to_int(field(doc, "iota"), "iota"));
  ds.total_episodes = to_int(field(doc, "total_episodes"), "total_episodes");
  for (const auto& g : to_array(field(doc, "gamma_sq"), "gamma_sq")) ds.gamma_sq.push_back(to_double(g, "gamma_sq"));

  const int n_pairs = ds.num_states * ds.num_actions;
  const json& feats = to_array(field(doc, "features"), "features");
  if (static_cast<int>(feats.size()) != n_pairs)
    throw ParseError(fmt::format("features: expected {} entries, found {}", n_pairs, feats.size()));
  ds.features.resize(n_pairs, ds.d);
  for (int p = 0; p < n_pairs; ++p) {
    const std::string where = fmt::format("features[{}]", p);
    const json& row = to_array(feats[p], where);
    if (static_cast<int>(row.size()) != ds.d) throw ParseError(where + ": wrong length");
    for (int j = 0; j < ds.d; ++j) ds.features(p, j) = to_double(row[j], where);
  }

  const json& parts = to_array(field(doc, "partitions"), "partitions");
  if (static_cast<int>(parts.size()) != ds.horizon)
    throw ParseError(fmt::format("partitions: expected {} entries, found {}", ds.horizon, parts.size()));
  for (int h = 0; h < ds.horizon; ++h) {
    const std::string where = fmt::format("partitions[{}]", h);
    CoveringPartition part;
    part.h = static_cast<int>(to_int(field(parts[h], "h"), where + ".h"));
    part.lambda = to_double(field(parts[h], "lambda"), where + ".lambda");
    if (!(part.lambda > 0.0)) throw ParseError(where + ".lambda: must be > 0");
    const json& levels = to_array(field(parts[h], "levels"), where + ".levels");
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const std::string lw = fmt::format("{}.levels[{}]", where, i);
      const double g = to_double(field(levels[i], "gamma_sq"), lw + ".gamma_sq");
      const std::int64_t K = to_int(field(levels[i], "K"), lw + ".K");
      CoverLevel level{g, K, {}, PrecisionMatrix(ds.d, part.lambda)};
      for (const auto& r : to_array(field(levels[i], "records"), lw + ".records")) {
        if (!r.is_array() || r.size() != 3) throw ParseError(lw + ".records: expected [s, a, s_next]");
        const int s = static_cast<int>(to_int(r[0], lw)), a = static_cast<int>(to_int(r[1], lw));
        const int s_next = static_cast<int>(to_int(r[2], lw));
        if (s < 0 || s >= ds.num_states || a < 0 || a >= ds.num_actions || s_next < 0 || s_next >= ds.num_states)
          throw ParseError(lw + ".records: index out of range");
        TransitionRecord rec{part.h, s, a, s_next, ds.features.row(s * ds.num_actions + a).transpose()};
        level.pm.update(rec.feature);
        level.data.push_back(std::move(rec));
      }
      part.chain.push(GoalLevel{level.pm.inv(), g});
      part.levels.push_back(std::move(level));
    }
    ds.partitions.push_back(std::move(part));
  }
  return ds;
}

void save_dataset(const ExplorationDataset& dataset, const std::string& path) {
  write_file(path, serialize_dataset(dataset));
}

ExplorationDataset load_dataset(const std::string& path) {
  try {
    return deserialize_dataset(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

RewardTable parse_reward(const std::string& text, int horizon, int num_states, int num_actions,
                         const RowMatrix& features) {
  const json doc = parse_json(text);
  if (!doc.is_object()) throw ParseError("reward document must be a JSON object");
  const int n_pairs = num_states * num_actions;
  RewardTable out;
  if (doc.contains("theta")) {
    const json& th = to_array(doc["theta"], "theta");
    if (static_cast<int>(th.size()) != horizon) throw ParseError("theta: need one vector per step");
    for (int h = 0; h < horizon; ++h) {
      const json& v = to_array(th[h], fmt::format("theta[{}]", h));
      if (static_cast<Eigen::Index>(v.size()) != features.cols()) throw ParseError(fmt::format("theta[{}]: wrong length", h));
      Vector t(features.cols());
      for (Eigen::Index j = 0; j < t.size(); ++j) t(j) = to_double(v[j], fmt::format("theta[{}]", h));
      out.push_back(features * t);
    }
  } else if (doc.contains("table")) {
    const json& tb = to_array(doc["table"], "table");
    if (static_cast<int>(tb.size()) != horizon) throw ParseError("table: need one row per step");
    for (int h = 0; h < horizon; ++h) {
      const json& v = to_array(tb[h], fmt::format("table[{}]", h));
      if (static_cast<int>(v.size()) != n_pairs) throw ParseError(fmt::format("table[{}]: expected {} entries", h, n_pairs));
      Vector r(n_pairs);
      for (int p = 0; p < n_pairs; ++p) r(p) = to_double(v[p], fmt::format("table[{}]", h));
      out.push_back(std::move(r));
    }
  } else {
    throw ParseError("reward document needs 'theta' or 'table'");
  }
  return out;
}

RewardTable load_reward(const std::string& path, int horizon, int num_states, int num_actions,
                        const RowMatrix& features) {
  try {
    return parse_reward(read_file(path), horizon, num_states, num_actions, features);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

std::string policy_csv(const PolicyTable& policy) {
  std::string out = "h,state,action,probability\n";
  for (int h = 0; h < policy.horizon(); ++h)
    for (int s = 0; s < policy.num_states(); ++s)
      for (int a = 0; a < policy.num_actions(); ++a) {
        const double p = policy.prob(h, s, a);
        if (p != 0.0) out += fmt::format("{},{},{},{:.10g}\n", h, s, a, p);
      }
  return out;
}

void save_policy_csv(const PolicyTable& policy, const std::string& path) { write_file(path, policy_csv(policy)); }

}  // namespace rflin
