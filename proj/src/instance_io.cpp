#include "rflin/instance_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "json.hpp"
#include "rflin/errors.hpp"

namespace rflin {
namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::string num(double x) {
  if (x == 0.0 && std::signbit(x)) return "-0.0";
  return fmt::format("{:.17g}", x);
}

template <class Row>
void write_row(std::string& out, const Row& row) {
  out += '[';
  for (Eigen::Index j = 0; j < row.size(); ++j) {
    if (j) out += ", ";
    out += num(row(j));
  }
  out += ']';
}

void write_names(std::string& out, const std::vector<std::string>& names) {
  out += '[';
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out += ", ";
    out += json(names[i]).dump();
  }
  out += ']';
}

// Line and column of a byte offset, both 1-based.
std::pair<std::size_t, std::size_t> locate(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const json& field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(fmt::format("missing field '{}'", key));
  return *it;
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(fmt::format("{}: expected an integer", where));
  return j.get<int>();
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(fmt::format("{}: expected a number", where));
  return j.get<double>();
}

const json& as_array(const json& j, std::size_t n, const std::string& where) {
  if (!j.is_array()) throw ParseError(fmt::format("{}: expected an array", where));
  if (j.size() != n)
    throw ParseError(fmt::format("{}: expected {} entries, found {}", where, n, j.size()));
  return j;
}

std::vector<std::string> as_names(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(fmt::format("{}: expected a non-empty array", where));
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_string()) throw ParseError(fmt::format("{}[{}]: expected a string", where, i));
    out.push_back(j[i].get<std::string>());
  }
  return out;
}

}  // namespace

std::string serialize(const LinearMDP& mdp) {
  const int n_s = mdp.num_states();
  const int n_a = mdp.num_actions();
  std::string out;
  out += "{\n";
  out += fmt::format("  \"version\": {},\n", kFormatVersion);
  out += fmt::format("  \"d\": {},\n", mdp.dim());
  out += fmt::format("  \"H\": {},\n", mdp.horizon());
  out += "  \"states\": ";
  write_names(out, mdp.states());
  out += ",\n  \"actions\": ";
  write_names(out, mdp.actions());
  out += ",\n  \"phi\": [\n";
  for (int s = 0; s < n_s; ++s) {
    out += "    [";
    for (int a = 0; a < n_a; ++a) {
      if (a) out += ", ";
      write_row(out, mdp.features().row(mdp.pair_index(s, a)));
    }
    out += s + 1 < n_s ? "],\n" : "]\n";
  }
  out += "  ],\n  \"mu\": [\n";
  for (int h = 0; h < mdp.horizon(); ++h) {
    out += "    [";
    for (int s = 0; s < n_s; ++s) {
      if (s) out += ", ";
      write_row(out, mdp.mu(h).row(s));
    }
    out += h + 1 < mdp.horizon() ? "],\n" : "]\n";
  }
  out += "  ],\n  \"theta\": [\n";
  for (int h = 0; h < mdp.horizon(); ++h) {
    out += "    ";
    write_row(out, mdp.theta(h));
    out += h + 1 < mdp.horizon() ? ",\n" : "\n";
  }
  out += "  ],\n";
  out += "  \"initial_state\": " + json(mdp.states()[mdp.initial_state()]).dump() + "\n";
  out += "}\n";
  return out;
}

LinearMDP deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = locate(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ParseError(fmt::format("line {}, column {}: {}", line, col, e.what()));
  }
  if (!doc.is_object()) throw ParseError("instance document must be a JSON object");
  static const char* const known[] = {"version", "d",  "H",     "states",
                                      "actions", "phi", "mu", "theta", "initial_state"};
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ParseError(fmt::format("unknown field '{}'", it.key()));
  }
  if (doc.contains("version") && as_int(doc["version"], "version") != kFormatVersion)
    throw ParseError(fmt::format("version: unsupported instance format version {}",
                                 doc["version"].dump()));

  const int d = as_int(field(doc, "d"), "d");
  const int horizon = as_int(field(doc, "H"), "H");
  if (d < 1) throw ParseError("d: must be >= 1");
  if (horizon < 1) throw ParseError("H: must be >= 1");
  auto states = as_names(field(doc, "states"), "states");
  auto actions = as_names(field(doc, "actions"), "actions");
  const auto n_s = states.size();
  const auto n_a = actions.size();

  const json& jphi = as_array(field(doc, "phi"), n_s, "phi");
  RowMatrix phi(static_cast<Eigen::Index>(n_s * n_a), d);
  for (std::size_t s = 0; s < n_s; ++s) {
    const json& per_state = as_array(jphi[s], n_a, fmt::format("phi[{}]", s));
    for (std::size_t a = 0; a < n_a; ++a) {
      const std::string where = fmt::format("phi[{}][{}]", s, a);
      const json& v = as_array(per_state[a], d, where);
      for (int j = 0; j < d; ++j)
        phi(static_cast<Eigen::Index>(s * n_a + a), j) =
            as_double(v[j], fmt::format("{}[{}]", where, j));
    }
  }

  const json& jmu = as_array(field(doc, "mu"), horizon, "mu");
  std::vector<Matrix> mu;
  for (int h = 0; h < horizon; ++h) {
    const json& per_step = as_array(jmu[h], n_s, fmt::format("mu[{}]", h));
    Matrix m(static_cast<Eigen::Index>(n_s), d);
    for (std::size_t s = 0; s < n_s; ++s) {
      const std::string where = fmt::format("mu[{}][{}]", h, s);
      const json& v = as_array(per_step[s], d, where);
      for (int j = 0; j < d; ++j)
        m(static_cast<Eigen::Index>(s), j) = as_double(v[j], fmt::format("{}[{}]", where, j));
    }
    mu.push_back(std::move(m));
  }

  const json& jtheta = as_array(field(doc, "theta"), horizon, "theta");
  std::vector<Vector> theta;
  for (int h = 0; h < horizon; ++h) {
    const std::string where = fmt::format("theta[{}]", h);
    const json& v = as_array(jtheta[h], d, where);
    Vector t(d);
    for (int j = 0; j < d; ++j) t(j) = as_double(v[j], fmt::format("{}[{}]", where, j));
    theta.push_back(std::move(t));
  }

  const json& jinit = field(doc, "initial_state");
  if (!jinit.is_string()) throw ParseError("initial_state: expected a state name");
  const auto init_name = jinit.get<std::string>();
  int init = -1;
  for (std::size_t s = 0; s < n_s; ++s)
    if (states[s] == init_name) init = static_cast<int>(s);
  if (init < 0) throw ParseError(fmt::format("initial_state: unknown state '{}'", init_name));

  try {
    return LinearMDP(d, horizon, std::move(states), std::move(actions), std::move(phi),
                     std::move(mu), std::move(theta), init);
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

void save_instance(const LinearMDP& mdp, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << serialize(mdp);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

LinearMDP load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return deserialize(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

}  // namespace rflin
