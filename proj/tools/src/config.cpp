#include "epnozzle/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "epnozzle/io.hpp"

namespace epn::cli {

namespace fs = std::filesystem;

namespace {

Error config_error(const std::string& what) { return Error(ErrorCode::config_error, what); }

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw config_error(std::string(key) + ": '" + std::string(text) + "' is not a finite number");
  return v;
}

int to_int(std::string_view key, std::string_view text) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw config_error(std::string(key) + ": '" + std::string(text) + "' is not an integer");
  return v;
}

bool to_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw config_error(std::string(key) + ": '" + std::string(text) + "' is not a boolean");
}

std::vector<double> to_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    if (item.empty()) throw config_error(std::string(key) + ": empty list entry");
    out.push_back(to_double(key, item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

SweepChannel to_channel(std::string_view text) {
  static const std::map<std::string_view, SweepChannel> names{
      {"all", SweepChannel::all},           {"potential", SweepChannel::potential},
      {"pressure", SweepChannel::pressure}, {"entropy", SweepChannel::entropy},
      {"bernoulli", SweepChannel::bernoulli}, {"charge", SweepChannel::charge}};
  const auto it = names.find(text);
  if (it == names.end())
    throw config_error("sweep_channel: '" + std::string(text) +
                       "' is not one of all, potential, pressure, entropy, bernoulli, charge");
  return it->second;
}

using Setter = std::function<void(RunConfig&, std::string_view key, std::string_view value,
                                  const fs::path& base_dir)>;

template <class Member>
Setter set_double(Member member) {
  return [member](RunConfig& c, std::string_view k, std::string_view v, const fs::path&) {
    std::invoke(member, c) = to_double(k, v);
  };
}

template <class Member>
Setter set_int(Member member) {
  return [member](RunConfig& c, std::string_view k, std::string_view v, const fs::path&) {
    std::invoke(member, c) = to_int(k, v);
  };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = [] {
    std::vector<std::pair<std::string, Setter>> t;
    auto bg = [](double BackgroundParams::*field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v, const fs::path&) {
        c.background.*field = to_double(k, v);
      };
    };
    auto pert = [](double Perturbation::*field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v, const fs::path&) {
        c.perturbation.*field = to_double(k, v);
      };
    };
    auto solver_d = [](double SolverConfig::*field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v, const fs::path&) {
        c.solver.*field = to_double(k, v);
      };
    };
    auto solver_i = [](int SolverConfig::*field) {
      return [field](RunConfig& c, std::string_view k, std::string_view v, const fs::path&) {
        c.solver.*field = to_int(k, v);
      };
    };
    t.emplace_back("gamma", bg(&BackgroundParams::gamma));
    t.emplace_back("p_hat", bg(&BackgroundParams::p_hat));
    t.emplace_back("c_v", bg(&BackgroundParams::c_v));
    t.emplace_back("s0", bg(&BackgroundParams::s0));
    t.emplace_back("j0", bg(&BackgroundParams::j0));
    t.emplace_back("b0", bg(&BackgroundParams::b0));
    t.emplace_back("rho0", bg(&BackgroundParams::rho0));
    t.emplace_back("e0", bg(&BackgroundParams::e0));
    t.emplace_back("length", bg(&BackgroundParams::length));
    t.emplace_back("n1", set_int(&RunConfig::n1));
    t.emplace_back("n2", set_int(&RunConfig::n2));
    t.emplace_back("background_steps", set_int(&RunConfig::background_steps));
    t.emplace_back("amplitude", [](RunConfig& c, std::string_view k, std::string_view v,
                                   const fs::path&) {
      const double a = to_double(k, v);
      c.perturbation.potential = c.perturbation.pressure = c.perturbation.entropy =
          c.perturbation.bernoulli = c.perturbation.charge = a;
    });
    t.emplace_back("a_phi", pert(&Perturbation::potential));
    t.emplace_back("a_p", pert(&Perturbation::pressure));
    t.emplace_back("a_S", pert(&Perturbation::entropy));
    t.emplace_back("a_B", pert(&Perturbation::bernoulli));
    t.emplace_back("a_b", pert(&Perturbation::charge));
    t.emplace_back("phi_entrance_weight", pert(&Perturbation::potential_entrance_weight));
    t.emplace_back("phi_exit_weight", pert(&Perturbation::potential_exit_weight));
    t.emplace_back("inner_tol", solver_d(&SolverConfig::inner_tol));
    t.emplace_back("max_inner", solver_i(&SolverConfig::max_inner));
    t.emplace_back("stagnation_factor", solver_d(&SolverConfig::stagnation_factor));
    t.emplace_back("outer_tol", solver_d(&SolverConfig::outer_tol));
    t.emplace_back("max_outer", solver_i(&SolverConfig::max_outer));
    t.emplace_back("linear_tol", solver_d(&SolverConfig::linear_tol));
    t.emplace_back("linear_max_iter", solver_i(&SolverConfig::linear_max_iter));
    t.emplace_back("linear_method", [](RunConfig& c, std::string_view, std::string_view v,
                                       const fs::path&) {
      if (v == "direct_lu") c.solver.linear_method = LinearMethod::direct_lu;
      else if (v == "bicgstab_ilut") c.solver.linear_method = LinearMethod::bicgstab_ilut;
      else throw config_error("linear_method: '" + std::string(v) +
                              "' is not direct_lu or bicgstab_ilut");
    });
    t.emplace_back("inner_ordering", [](RunConfig& c, std::string_view, std::string_view v,
                                        const fs::path&) {
      if (v == "psi_first") c.solver.psi_first = true;
      else if (v == "jacobi") c.solver.psi_first = false;
      else throw config_error("inner_ordering: '" + std::string(v) + "' is not psi_first or jacobi");
    });
    t.emplace_back("damping", solver_d(&SolverConfig::damping));
    t.emplace_back("growth_multiple", solver_d(&SolverConfig::growth_multiple));
    t.emplace_back("coercivity_pairs", solver_i(&SolverConfig::coercivity_pairs));
    t.emplace_back("seed", [](RunConfig& c, std::string_view k, std::string_view v,
                              const fs::path&) {
      std::uint64_t s = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
      if (ec != std::errc() || ptr != v.data() + v.size())
        throw config_error(std::string(k) + ": '" + std::string(v) + "' is not an unsigned integer");
      c.solver.seed = s;
    });
    t.emplace_back("debug_checks", [](RunConfig& c, std::string_view k, std::string_view v,
                                      const fs::path&) { c.solver.debug_checks = to_bool(k, v); });
    t.emplace_back("inlet_table", [](RunConfig& c, std::string_view, std::string_view v,
                                     const fs::path& base) {
      const fs::path p(v);
      c.inlet_table = p.is_relative() && !base.empty() ? base / p : p;
    });
    t.emplace_back("sweep_amplitudes", [](RunConfig& c, std::string_view k, std::string_view v,
                                          const fs::path&) { c.sweep_amplitudes = to_list(k, v); });
    t.emplace_back("sweep_channel", [](RunConfig& c, std::string_view, std::string_view v,
                                       const fs::path&) { c.sweep_channel = to_channel(v); });
    t.emplace_back("out", [](RunConfig& c, std::string_view, std::string_view v,
                             const fs::path& base) {
      const fs::path p(v);
      c.out_dir = p.is_relative() && !base.empty() ? base / p : p;
    });
    return t;
  }();
  return table;
}

}  // namespace

BackgroundParams RunConfig::physical_defaults() {
  BackgroundParams p;
  p.gamma = 1.4;
  p.rho0 = 1.2;
  p.e0 = 0.1;
  return p;
}

void RunConfig::validate() const {
  if (n1 < 8 || n2 < 8) throw config_error("grid needs n1, n2 >= 8");
  if (background_steps < 0) throw config_error("background_steps must be >= 0");
  for (double a : {perturbation.potential, perturbation.pressure, perturbation.entropy,
                   perturbation.bernoulli, perturbation.charge, perturbation.potential_entrance_weight,
                   perturbation.potential_exit_weight})
    if (!std::isfinite(a)) throw config_error("perturbation amplitudes must be finite");
  if (!(solver.inner_tol > 0.0) || !(solver.outer_tol > 0.0) || !(solver.linear_tol > 0.0))
    throw config_error("tolerances must be positive");
  if (!(solver.stagnation_factor >= 1.0)) throw config_error("stagnation_factor must be >= 1");
  if (solver.max_inner < 1 || solver.max_outer < 1 || solver.linear_max_iter < 1)
    throw config_error("iteration caps must be >= 1");
  if (!(solver.damping > 0.0 && solver.damping <= 1.0))
    throw config_error("damping must lie in (0, 1]");
  if (!(solver.growth_multiple > 0.0)) throw config_error("growth_multiple must be positive");
  if (solver.coercivity_pairs < 1) throw config_error("coercivity_pairs must be >= 1");
  try {
    background.validate();
  } catch (const Error& e) {
    throw config_error(e.message());
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [name, setter] : setters()) k.push_back(name);
    return k;
  }();
  return keys;
}

RunConfig parse_config(std::string_view text, const fs::path& base_dir) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw config_error(where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (value.empty()) throw config_error(where + key + " has no value");
    const auto& table = setters();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const auto& entry) { return entry.first == key; });
    if (it == table.end()) throw config_error(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw config_error(where + "key '" + key + "' repeated");
    try {
      it->second(cfg, key, value, base_dir);
    } catch (const Error& e) {
      throw config_error(where + e.message());
    }
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw config_error(e.message());
  }
  return parse_config(text, path.parent_path());
}

std::pair<int, int> parse_grid(std::string_view text) {
  const auto x = text.find('x');
  if (x == std::string_view::npos) throw config_error("grid '" + std::string(text) + "' is not N1xN2");
  return {to_int("grid", text.substr(0, x)), to_int("grid", text.substr(x + 1))};
}

InletTable read_inlet_table(const fs::path& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const Error& e) {
    throw config_error(e.message());
  }
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (trim(line) != "x2,S,B") throw config_error(path.string() + ": header must be x2,S,B");
  InletTable t;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<double> row = to_list(path.string(), line);
    if (row.size() != 3) throw config_error(path.string() + ": rows need three columns");
    t.x2.push_back(row[0]);
    t.entropy.push_back(row[1]);
    t.bernoulli.push_back(row[2]);
  }
  return t;
}

Perturbation channel_perturbation(SweepChannel channel, double a) {
  Perturbation p;
  switch (channel) {
    case SweepChannel::all: p = Perturbation::uniform(a); break;
    case SweepChannel::potential: p.potential = a; break;
    case SweepChannel::pressure: p.pressure = a; break;
    case SweepChannel::entropy: p.entropy = a; break;
    case SweepChannel::bernoulli: p.bernoulli = a; break;
    case SweepChannel::charge: p.charge = a; break;
  }
  return p;
}

}  // namespace epn::cli
