// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The mccbf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mccbf/harness.hpp"

#include "mccbf/centralized.hpp"
#include "mccbf/metrics.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#ifndef MCCBF_VERSION
#define MCCBF_VERSION "unknown"
#endif

namespace mccbf::harness {

namespace {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double v) { return 10.0 * std::log10(v); }

std::uint64_t trial_seed(const ExperimentSpec& spec, int trial) {
  return derive_seed(spec.seed, {static_cast<std::uint64_t>(trial)});
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

template <class T>
std::string join_numbers(const std::vector<T>& v) {
  std::vector<std::string> s;
  for (const auto& x : v) s.push_back(format_number(static_cast<double>(x)));
  return join(s, '|');
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not a number: " + v);
  return out;
}

long long parse_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key + ": not an integer: " + v);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": not a boolean: " + v);
}

std::vector<double> parse_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split(v, ',')) out.push_back(parse_double(key, s));
  return out;
}

std::vector<int> parse_ints(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split(v, ',')) out.push_back(static_cast<int>(parse_int(key, s)));
  return out;
}

using Setter = std::function<void(ExperimentSpec&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"system.cells", [](auto& s, auto& k, auto& v) { s.system.cells = static_cast<int>(parse_int(k, v)); }},
      {"system.users", [](auto& s, auto& k, auto& v) { s.system.users = static_cast<int>(parse_int(k, v)); }},
      {"system.antennas", [](auto& s, auto& k, auto& v) { s.system.antennas = static_cast<int>(parse_int(k, v)); }},
      {"system.rf_chains", [](auto& s, auto& k, auto& v) { s.system.rf_chains = static_cast<int>(parse_int(k, v)); }},
      {"system.paths", [](auto& s, auto& k, auto& v) { s.system.paths = static_cast<int>(parse_int(k, v)); }},
      {"system.dict_size", [](auto& s, auto& k, auto& v) { s.system.dict_size = static_cast<int>(parse_int(k, v)); }},
      {"system.spacing", [](auto& s, auto& k, auto& v) { s.system.spacing = parse_double(k, v); }},
      {"system.noise", [](auto& s, auto& k, auto& v) { s.system.noise = parse_double(k, v); }},
      {"system.sinr_target_db",
       [](auto& s, auto& k, auto& v) { s.system.sinr_target = db_to_linear(parse_double(k, v)); }},
      {"system.allow_large", [](auto& s, auto& k, auto& v) { s.system.allow_large = parse_bool(k, v); }},
      {"async.S", [](auto& s, auto& k, auto& v) { s.async.S = static_cast<int>(parse_int(k, v)); }},
      {"async.tau", [](auto& s, auto& k, auto& v) { s.async.tau = static_cast<int>(parse_int(k, v)); }},
      {"async.p", [](auto& s, auto& k, auto& v) { s.async.p = parse_double(k, v); }},
      {"async.Q", [](auto& s, auto& k, auto& v) { s.async.Q = static_cast<int>(parse_int(k, v)); }},
      {"async.max_ticks", [](auto& s, auto& k, auto& v) { s.async.max_ticks = static_cast<long>(parse_int(k, v)); }},
      {"async.delivery_delay",
       [](auto& s, auto& k, auto& v) { s.async.delivery_delay = static_cast<int>(parse_int(k, v)); }},
      {"admm.c", [](auto& s, auto& k, auto& v) { s.c = parse_double(k, v); }},
      {"admm.max_outer", [](auto& s, auto& k, auto& v) { s.max_outer = static_cast<int>(parse_int(k, v)); }},
      {"admm.stop_tol", [](auto& s, auto& k, auto& v) { s.stop_tol = parse_double(k, v); }},
      {"robust.eps", [](auto& s, auto& k, auto& v) { s.eps = parse_double(k, v); }},
      {"hybrid.sigma_e2", [](auto& s, auto& k, auto& v) { s.bl.sigma_e2 = parse_double(k, v); }},
      {"hybrid.rho", [](auto& s, auto& k, auto& v) { s.bl.rho = parse_double(k, v); }},
      {"hybrid.eta_max", [](auto& s, auto& k, auto& v) { s.bl.eta_max = static_cast<int>(parse_int(k, v)); }},
      {"sweep.gamma_db", [](auto& s, auto& k, auto& v) { s.gamma_db = parse_doubles(k, v); }},
      {"sweep.eps", [](auto& s, auto& k, auto& v) { s.eps_grid = parse_doubles(k, v); }},
      {"sweep.antennas", [](auto& s, auto& k, auto& v) { s.antennas_grid = parse_ints(k, v); }},
      {"sweep.S", [](auto& s, auto& k, auto& v) { s.s_grid = parse_ints(k, v); }},
      {"sweep.tau", [](auto& s, auto& k, auto& v) { s.tau_grid = parse_ints(k, v); }},
      {"sweep.Q", [](auto& s, auto& k, auto& v) { s.q_grid = parse_ints(k, v); }},
      {"sweep.accuracy", [](auto& s, auto& k, auto& v) { s.accuracy = parse_double(k, v); }},
      {"sweep.pipelines",
       [](auto& s, auto&, auto& v) {
         s.pipelines.clear();
         for (const auto& p : split(v, ',')) s.pipelines.push_back(parse_pipeline(p));
       }},
      {"run.trials", [](auto& s, auto& k, auto& v) { s.trials = static_cast<int>(parse_int(k, v)); }},
      {"run.seed", [](auto& s, auto& k, auto& v) { s.seed = static_cast<std::uint64_t>(parse_int(k, v)); }},
      {"run.threads", [](auto& s, auto& k, auto& v) { s.threads = static_cast<int>(parse_int(k, v)); }},
  };
  return table;
}

}  // namespace

const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Centralized:
      return "centralized";
    case Pipeline::Sdbf:
      return "sdbf";
    case Pipeline::Adbf:
      return "adbf";
  }
  return "?";
}

Pipeline parse_pipeline(const std::string& name) {
  if (name == "centralized") return Pipeline::Centralized;
  if (name == "sdbf") return Pipeline::Sdbf;
  if (name == "adbf") return Pipeline::Adbf;
  throw ConfigError("unknown pipeline: " + name);
}

const std::vector<std::string>& experiment_ids() {
  static const std::vector<std::string> ids = {
      "feasibility_vs_gamma", "feasibility_vs_eps", "power_vs_gamma",     "power_per_realization",
      "accuracy_vs_iter",     "convergence_vs_S",   "convergence_vs_tau", "sumrate_bl_vs_somp"};
  return ids;
}

ExperimentSpec default_spec(const std::string& id) {
  ExperimentSpec s;
  s.id = id;
  s.system.cells = 2;
  s.system.users = 2;
  s.system.antennas = 16;
  s.system.sinr_target = db_to_linear(10.0);
  s.pipelines = {Pipeline::Centralized, Pipeline::Sdbf, Pipeline::Adbf};
  if (id == "feasibility_vs_gamma") {
    s.async.Q = 20;
    s.max_outer = 20;
    s.eps = 0.4;
    s.gamma_db = {0, 4, 8, 12, 16, 20};
    s.pipelines = {Pipeline::Sdbf, Pipeline::Adbf};
  } else if (id == "feasibility_vs_eps") {
    s.async.Q = 20;
    s.max_outer = 20;
    s.gamma_db = {5, 10, 15};
    s.eps_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    s.pipelines = {Pipeline::Adbf};
  } else if (id == "power_vs_gamma") {
    s.antennas_grid = {8, 16};
    s.eps_grid = {0.0, 0.1};
    s.gamma_db = {0, 5, 10, 15};
    s.pipelines = {Pipeline::Centralized, Pipeline::Adbf};
  } else if (id == "power_per_realization") {
    s.trials = 40;
    s.eps = 0.1;
    s.q_grid = {20, 40};
  } else if (id == "accuracy_vs_iter") {
    s.async.Q = 300;
    s.s_grid = {1, 2};
  } else if (id == "convergence_vs_S") {
    s.system.cells = 4;
    s.async.Q = 300;
    s.trials = 10;
    s.s_grid = {1, 2, 3, 4};
  } else if (id == "convergence_vs_tau") {
    s.system.cells = 4;
    s.async.S = 2;
    s.async.Q = 300;
    s.trials = 10;
    s.tau_grid = {1, 2, 4, 8};
  } else if (id == "sumrate_bl_vs_somp") {
    s.system.cells = 3;
    s.async.S = 2;
    s.eps = 0.1;
    s.gamma_db = {0, 5, 10, 15, 20};
  } else if (id == "compare" || id == "verify") {
    s.eps = 0.1;
    s.trials = 5;
  } else {
    throw ConfigError("unknown experiment: " + id);
  }
  return s;
}

void ExperimentSpec::validate() const {
  system.validate();
  async.validate(system.cells);
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (!(c > 0.0)) throw ConfigError("ADMM penalty must be positive");
  if (max_outer < 1) throw ConfigError("max_outer must be at least 1");
  if (!(stop_tol > 0.0)) throw ConfigError("stop_tol must be positive");
  if (!(eps >= 0.0)) throw ConfigError("eps must be nonnegative");
  if (!(accuracy > 0.0)) throw ConfigError("accuracy must be positive");
  for (double e : eps_grid) {
    if (!(e >= 0.0)) throw ConfigError("eps grid must be nonnegative");
  }
  auto need = [&](bool ok, const char* what) {
    if (!ok) throw ConfigError(id + " needs a non-empty " + what + " grid");
  };
  if (id == "feasibility_vs_gamma") need(!gamma_db.empty() && !pipelines.empty(), "gamma_db/pipelines");
  if (id == "feasibility_vs_eps") need(!gamma_db.empty() && !eps_grid.empty() && !pipelines.empty(), "gamma_db/eps");
  if (id == "power_vs_gamma") {
    need(!gamma_db.empty() && !eps_grid.empty() && !antennas_grid.empty() && !pipelines.empty(),
         "gamma_db/eps/antennas");
  }
  if (id == "power_per_realization") need(!q_grid.empty(), "Q");
  if (id == "accuracy_vs_iter" || id == "convergence_vs_S") need(!s_grid.empty(), "S");
  if (id == "convergence_vs_tau") need(!tau_grid.empty(), "tau");
  if (id == "sumrate_bl_vs_somp") need(!gamma_db.empty(), "gamma_db");
  for (int s : s_grid) {
    if (s < 1 || s > system.cells) throw ConfigError("S grid values must lie in [1, N]");
  }
  for (int t : tau_grid) {
    if (t < 1) throw ConfigError("tau grid values must be positive");
  }
  for (int q : q_grid) {
    if (q < 1) throw ConfigError("Q grid values must be positive");
  }
  for (int nt : antennas_grid) {
    SystemConfig c2 = system;
    c2.antennas = nt;
    c2.validate();
  }
}

void apply_config(ExperimentSpec& spec, std::istream& ini) {
  boost::property_tree::ptree pt;
  try {
    boost::property_tree::ini_parser::read_ini(ini, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  const auto& table = setters();
  for (const auto& [section, keys] : pt) {
    if (keys.empty() && !keys.data().empty()) throw ConfigError("config key outside a section: " + section);
    for (const auto& [key, node] : keys) {
      const std::string full = section + "." + key;
      const auto it = table.find(full);
      if (it == table.end()) throw ConfigError("unknown config key: " + full);
      it->second(spec, full, node.get_value<std::string>());
    }
  }
}

void apply_config_file(ExperimentSpec& spec, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path.string());
  apply_config(spec, is);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string describe(const ExperimentSpec& s) {
  std::vector<std::string> p;
  auto kv = [&](const std::string& k, const std::string& v) { p.push_back(k + "=" + v); };
  auto num = [&](const std::string& k, double v) { kv(k, format_number(v)); };
  kv("experiment", s.id);
  num("cells", s.system.cells);
  num("users", s.system.users);
  num("antennas", s.system.antennas);
  num("rf_chains", s.system.n_rf());
  num("paths", s.system.paths);
  num("dict_size", s.system.dict_size);
  num("spacing", s.system.spacing);
  num("noise", s.system.noise);
  num("sinr_target_db", linear_to_db(s.system.sinr_target));
  num("S", s.async.S);
  num("tau", s.async.tau);
  num("p", s.async.p);
  num("Q", s.async.Q);
  num("max_ticks", static_cast<double>(s.async.max_ticks));
  num("delivery_delay", s.async.delivery_delay);
  num("c", s.c);
  num("max_outer", s.max_outer);
  num("stop_tol", s.stop_tol);
  num("eps", s.eps);
  num("bl_sigma_e2", s.bl.sigma_e2);
  num("bl_rho", s.bl.rho);
  num("bl_eta_max", s.bl.eta_max);
  num("accuracy", s.accuracy);
  kv("gamma_db_grid", join_numbers(s.gamma_db));
  kv("eps_grid", join_numbers(s.eps_grid));
  kv("antennas_grid", join_numbers(s.antennas_grid));
  kv("S_grid", join_numbers(s.s_grid));
  kv("tau_grid", join_numbers(s.tau_grid));
  kv("Q_grid", join_numbers(s.q_grid));
  std::vector<std::string> names;
  for (auto pl : s.pipelines) names.push_back(to_string(pl));
  kv("pipelines", join(names, '|'));
  num("trials", s.trials);
  kv("seed", std::to_string(s.seed));
  return join(p, ';');
}

void Table::add(std::vector<std::string> row) {
  if (row.size() != columns.size()) throw std::logic_error("table " + name + ": row width mismatch");
  rows.push_back(std::move(row));
}

void write_table(const Table& table, const ExperimentSpec& spec, std::ostream& os) {
  os << "# mccbf " << MCCBF_VERSION << " table=" << table.name << " experiment=" << spec.id << " seed=" << spec.seed
     << " trials=" << spec.trials << '\n';
  os << "# config: " << describe(spec) << '\n';
  os << join(table.columns, ',') << '\n';
  for (const auto& r : table.rows) os << join(r, ',') << '\n';
}

std::vector<std::filesystem::path> write_tables(const std::vector<Table>& tables, const ExperimentSpec& spec,
                                                const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> out;
  for (const auto& t : tables) {
    const auto path = out_dir / (t.name + ".csv");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_table(t, spec, os);
    out.push_back(path);
  }
  return out;
}

namespace {

TrialResult from_trace(const metrics::ExperimentTrace& trace, const ChannelSet& channels, const SystemConfig& cfg,
                       double eps) {
  TrialResult r;
  r.series = metrics::power_series(trace);
  r.power = trace.summary.final_power;
  r.iterations = trace.summary.iterations;
  r.converged = trace.summary.converged;
  r.feasible = r.converged && trace.summary.feasible;
  if (!r.feasible) {
    const ici::IciLayout layout(cfg.cells, cfg.users);
    const auto unc = robust::UncertaintyModel::spherical(eps);
    r.feasible = robust::recovery_finalizer(channels, cfg, layout, unc)(trace.consensus, {}).has_value();
  }
  return r;
}

sdbf::AdmmOptions admm_options(const ExperimentSpec& spec) {
  sdbf::AdmmOptions o;
  o.c = spec.c;
  o.max_outer = spec.max_outer;
  o.stop_tol = spec.stop_tol;
  return o;
}

adbf::AsyncOptions async_options(const ExperimentSpec& spec) {
  adbf::AsyncOptions o;
  o.c = spec.c;
  o.stop_tol = spec.stop_tol;
  return o;
}

adbf::AsyncConfig async_for(const ExperimentSpec& spec, const SystemConfig& cfg) {
  adbf::AsyncConfig a = spec.async;
  a.seed = derive_seed(cfg.seed, {0xa5u});
  return a;
}

metrics::ExperimentTrace run_async_trace(const ChannelSet& ch, const SystemConfig& cfg, const adbf::AsyncConfig& a,
                                         const ExperimentSpec& spec, double eps) {
  if (eps == 0.0) return adbf::run_adbf(ch, cfg, a, async_options(spec));
  return robust::run_robust_adbf(ch, cfg, robust::UncertaintyModel::spherical(eps), a, async_options(spec));
}

TrialResult guarded(const std::function<TrialResult()>& fn) {
  try {
    return fn();
  } catch (const std::exception&) {
    TrialResult r;
    r.error = true;
    return r;
  }
}

SystemConfig trial_config(const ExperimentSpec& spec, int trial) {
  SystemConfig cfg = spec.system;
  cfg.seed = trial_seed(spec, trial);
  return cfg;
}

struct PointStats {
  int trials = 0;
  int feasible = 0;
  int errors = 0;
  double mean_power = std::numeric_limits<double>::quiet_NaN();
};

PointStats stats(const std::vector<TrialResult>& rs) {
  PointStats s;
  double sum = 0.0;
  for (const auto& r : rs) {
    ++s.trials;
    if (r.error) ++s.errors;
    if (r.feasible) {
      ++s.feasible;
      sum += r.power;
    }
  }
  if (s.feasible > 0) s.mean_power = sum / s.feasible;
  return s;
}

std::string pct(int num, int den) { return format_number(den > 0 ? 100.0 * num / den : 0.0); }

std::vector<TrialResult> sweep_point(const ExperimentSpec& spec, Pipeline p, double gamma_db, double eps,
                                     int antennas) {
  return parallel_map<TrialResult>(spec.trials, spec.threads, [&](int t) {
    return guarded([&] {
      SystemConfig cfg = trial_config(spec, t);
      cfg.sinr_target = db_to_linear(gamma_db);
      cfg.antennas = antennas;
      const auto ch = sample_channels(cfg, cfg.seed);
      return run_pipeline(p, ch, cfg, spec, eps);
    });
  });
}

std::vector<Table> feasibility_tables(const ExperimentSpec& spec, const std::vector<double>& eps_values) {
  Table t{spec.id, {"gamma_db", "eps", "pipeline", "trials", "feasible", "rate_pct", "errors"}, {}};
  for (double g : spec.gamma_db) {
    for (double e : eps_values) {
      for (auto p : spec.pipelines) {
        const auto s = stats(sweep_point(spec, p, g, e, spec.system.antennas));
        t.add({format_number(g), format_number(e), to_string(p), std::to_string(s.trials), std::to_string(s.feasible),
               pct(s.feasible, s.trials), std::to_string(s.errors)});
      }
    }
  }
  return {t};
}

std::vector<Table> power_vs_gamma(const ExperimentSpec& spec) {
  Table t{spec.id, {"antennas", "eps", "gamma_db", "pipeline", "trials", "feasible", "mean_power_dbm", "errors"}, {}};
  for (int nt : spec.antennas_grid) {
    for (double e : spec.eps_grid) {
      for (double g : spec.gamma_db) {
        for (auto p : spec.pipelines) {
          const auto s = stats(sweep_point(spec, p, g, e, nt));
          t.add({std::to_string(nt), format_number(e), format_number(g), to_string(p), std::to_string(s.trials),
                 std::to_string(s.feasible), format_number(metrics::to_dbm(s.mean_power)), std::to_string(s.errors)});
        }
      }
    }
  }
  return {t};
}

std::vector<Table> power_per_realization(const ExperimentSpec& spec) {
  struct Realization {
    TrialResult centralized;
    std::vector<TrialResult> adbf;
    std::vector<TrialResult> robust;
  };
  const auto rs = parallel_map<Realization>(spec.trials, spec.threads, [&](int t) {
    Realization r;
    const SystemConfig cfg = trial_config(spec, t);
    const auto ch = sample_channels(cfg, cfg.seed);
    r.centralized = guarded([&] { return run_pipeline(Pipeline::Centralized, ch, cfg, spec, 0.0); });
    for (int q : spec.q_grid) {
      auto a = async_for(spec, cfg);
      a.Q = q;
      r.adbf.push_back(guarded([&] { return from_trace(run_async_trace(ch, cfg, a, spec, 0.0), ch, cfg, 0.0); }));
      if (spec.eps > 0.0) {
        r.robust.push_back(
            guarded([&] { return from_trace(run_async_trace(ch, cfg, a, spec, spec.eps), ch, cfg, spec.eps); }));
      }
    }
    return r;
  });
  Table t{spec.id, {"realization", "pipeline", "Q", "eps", "feasible", "power_dbm"}, {}};
  auto row = [&](int i, const std::string& name, const std::string& q, double e, const TrialResult& r) {
    t.add({std::to_string(i + 1), name, q, format_number(e), r.feasible ? "1" : "0",
           format_number(r.error ? std::numeric_limits<double>::quiet_NaN() : metrics::to_dbm(r.power))});
  };
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const int idx = static_cast<int>(i);
    row(idx, "centralized", "", 0.0, rs[i].centralized);
    for (std::size_t q = 0; q < spec.q_grid.size(); ++q) {
      row(idx, "adbf", std::to_string(spec.q_grid[q]), 0.0, rs[i].adbf[q]);
      if (spec.eps > 0.0) row(idx, "robust_adbf", std::to_string(spec.q_grid[q]), spec.eps, rs[i].robust[q]);
    }
  }
  return {t};
}

// Accuracy after iteration i, holding the last value once a run has stopped.
double accuracy_at(const std::vector<double>& series, std::size_t i, double ref) {
  if (series.empty()) return std::numeric_limits<double>::quiet_NaN();
  return metrics::normalized_power_accuracy(series[std::min(i, series.size() - 1)], ref);
}

std::vector<Table> accuracy_vs_iter(const ExperimentSpec& spec) {
  struct Runs {
    bool ok = false;
    double ref = 0.0;
    std::vector<std::vector<double>> series;  // sdbf, then adbf per S
  };
  const auto rs = parallel_map<Runs>(spec.trials, spec.threads, [&](int t) {
    Runs r;
    const SystemConfig cfg = trial_config(spec, t);
    const auto ch = sample_channels(cfg, cfg.seed);
    const auto ref = guarded([&] { return run_pipeline(Pipeline::Centralized, ch, cfg, spec, spec.eps); });
    if (!ref.feasible) return r;
    r.ok = true;
    r.ref = ref.power;
    r.series.push_back(guarded([&] { return run_pipeline(Pipeline::Sdbf, ch, cfg, spec, spec.eps); }).series);
    for (int s : spec.s_grid) {
      auto a = async_for(spec, cfg);
      a.S = s;
      r.series.push_back(metrics::power_series(run_async_trace(ch, cfg, a, spec, spec.eps)));
    }
    return r;
  });
  Table t{spec.id, {"pipeline", "S", "iteration", "median_accuracy", "mean_accuracy", "trials"}, {}};
  const std::size_t n_series = 1 + spec.s_grid.size();
  for (std::size_t k = 0; k < n_series; ++k) {
    const int len = k == 0 ? spec.max_outer : spec.async.Q;
    for (int i = 0; i < len; ++i) {
      std::vector<double> acc;
      for (const auto& r : rs) {
        if (!r.ok) continue;
        const double a = accuracy_at(r.series[k], static_cast<std::size_t>(i), r.ref);
        if (!std::isnan(a)) acc.push_back(a);
      }
      const double mean = acc.empty() ? std::numeric_limits<double>::quiet_NaN()
                                      : std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
      t.add({k == 0 ? "sdbf" : "adbf", k == 0 ? std::to_string(spec.system.cells) : std::to_string(spec.s_grid[k - 1]),
             std::to_string(i + 1), format_number(acc.empty() ? mean : metrics::median(acc)), format_number(mean),
             std::to_string(acc.size())});
    }
  }
  return {t};
}

std::vector<Table> convergence_sweep(const ExperimentSpec& spec, bool over_s) {
  const auto& grid = over_s ? spec.s_grid : spec.tau_grid;
  const std::string param = over_s ? "S" : "tau";
  struct Point {
    bool ok = false;
    std::vector<int> iterations;  // per grid value; Q + 1 when never reached
    std::vector<bool> reached;
  };
  const auto rs = parallel_map<Point>(spec.trials, spec.threads, [&](int t) {
    Point pt;
    const SystemConfig cfg = trial_config(spec, t);
    const auto ch = sample_channels(cfg, cfg.seed);
    const auto ref = guarded([&] { return run_pipeline(Pipeline::Centralized, ch, cfg, spec, spec.eps); });
    if (!ref.feasible) return pt;
    pt.ok = true;
    for (int g : grid) {
      auto a = async_for(spec, cfg);
      (over_s ? a.S : a.tau) = g;
      const auto series = metrics::power_series(run_async_trace(ch, cfg, a, spec, spec.eps));
      const int it = metrics::iterations_to_accuracy(series, ref.power, spec.accuracy);
      pt.reached.push_back(it > 0);
      pt.iterations.push_back(it > 0 ? it : a.Q + 1);
    }
    return pt;
  });
  Table trials{spec.id, {param, "trial", "iterations", "reached"}, {}};
  Table summary{spec.id + "_summary", {param, "median_iterations", "mean_iterations", "reached", "trials"}, {}};
  Table trend{spec.id + "_trend", {"statistic", "value"}, {}};
  std::vector<double> xs, ys, medians;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    std::vector<double> its;
    int reached = 0;
    for (std::size_t t = 0; t < rs.size(); ++t) {
      if (!rs[t].ok) continue;
      trials.add({std::to_string(grid[g]), std::to_string(t + 1), std::to_string(rs[t].iterations[g]),
                  rs[t].reached[g] ? "1" : "0"});
      its.push_back(rs[t].iterations[g]);
      reached += rs[t].reached[g] ? 1 : 0;
      xs.push_back(grid[g]);
      ys.push_back(rs[t].iterations[g]);
    }
    const double med = its.empty() ? std::numeric_limits<double>::quiet_NaN() : metrics::median(its);
    medians.push_back(med);
    const double mean = its.empty() ? std::numeric_limits<double>::quiet_NaN()
                                    : std::accumulate(its.begin(), its.end(), 0.0) / static_cast<double>(its.size());
    summary.add({std::to_string(grid[g]), format_number(med), format_number(mean), std::to_string(reached),
                 std::to_string(its.size())});
  }
  bool monotone = true;
  for (std::size_t g = 1; g < medians.size(); ++g) {
    monotone = monotone && (over_s ? medians[g] <= medians[g - 1] : medians[g] >= medians[g - 1]);
  }
  const auto sp = xs.size() >= 3 ? metrics::spearman(xs, ys) : metrics::SpearmanResult{};
  trend.add({"spearman_rho", format_number(sp.rho)});
  trend.add({"p_value", format_number(sp.p_value)});
  trend.add({"medians_monotone", monotone ? "1" : "0"});
  return {trials, summary, trend};
}

std::vector<Table> sumrate_bl_vs_somp(const ExperimentSpec& spec) {
  struct Rates {
    bool ok = false;
    double fd = 0.0, bl = 0.0, somp = 0.0;
  };
  Table t{spec.id,
          {"gamma_db", "eps", "trials", "feasible", "fd_sum_rate", "bl_sum_rate", "somp_sum_rate", "bl_ge_somp_pct"},
          {}};
  for (double g : spec.gamma_db) {
    const auto rs = parallel_map<Rates>(spec.trials, spec.threads, [&](int trial) {
      Rates r;
      try {
        SystemConfig cfg = trial_config(spec, trial);
        cfg.sinr_target = db_to_linear(g);
        const auto ch = sample_channels(cfg, cfg.seed);
        std::optional<FdBeamformers> bf;
        if (spec.eps > 0.0) {
          bf = robust::solve_robust_centralized(ch, cfg, robust::UncertaintyModel::spherical(spec.eps)).beamformers;
        } else {
          bf = centralized::solve_centralized(ch, cfg).beamformers;
        }
        if (!bf) return r;
        Rng rng(derive_seed(cfg.seed, {0xe7u}));
        const auto actual = perturb_channels(ch, spec.eps, rng);
        const CMatrix dict = build_dictionary(cfg.dict_size, cfg.antennas, cfg.spacing);
        std::vector<hybrid::HybridPrecoder> bl, somp;
        for (int n = 0; n < cfg.cells; ++n) {
          const CMatrix g_opt = hybrid::precoder_matrix(*bf, n);
          bl.push_back(hybrid::bl_decompose(g_opt, dict, cfg.n_rf(), spec.bl));
          somp.push_back(hybrid::somp_decompose(g_opt, dict, cfg.n_rf()));
        }
        r.fd = metrics::sum_rate(metrics::sinr(*bf, actual, cfg));
        r.bl = hybrid::evaluate_hybrid(actual, bl, cfg).sum_rate;
        r.somp = hybrid::evaluate_hybrid(actual, somp, cfg).sum_rate;
        r.ok = true;
      } catch (const std::exception&) {
        r.ok = false;
      }
      return r;
    });
    int n = 0, ge = 0;
    double fd = 0.0, bl = 0.0, somp = 0.0;
    for (const auto& r : rs) {
      if (!r.ok) continue;
      ++n;
      fd += r.fd;
      bl += r.bl;
      somp += r.somp;
      ge += r.bl >= r.somp ? 1 : 0;
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.add({format_number(g), format_number(spec.eps), std::to_string(spec.trials), std::to_string(n),
           format_number(n ? fd / n : nan), format_number(n ? bl / n : nan), format_number(n ? somp / n : nan),
           pct(ge, n)});
  }
  return {t};
}

double min_sinr_db(const FdBeamformers& bf, const ChannelSet& ch, const SystemConfig& cfg) {
  return linear_to_db(metrics::sinr(bf, ch, cfg).minCoeff());
}

PipelineRow trace_row(const std::string& name, const metrics::ExperimentTrace& tr, const ChannelSet& ch,
                      const SystemConfig& cfg) {
  PipelineRow r;
  r.pipeline = name;
  r.converged = tr.summary.converged;
  r.feasible = tr.summary.converged && tr.summary.feasible;
  r.power = tr.summary.final_power;
  r.iterations = tr.summary.iterations;
  r.min_sinr_db = min_sinr_db(tr.beamformers, ch, cfg);
  return r;
}

Check skipped(const std::string& name, const std::string& why) { return {name, true, true, why}; }

}  // namespace

TrialResult run_pipeline(Pipeline p, const ChannelSet& channels, const SystemConfig& cfg, const ExperimentSpec& spec,
                         double eps) {
  const auto unc = robust::UncertaintyModel::spherical(eps);
  switch (p) {
    case Pipeline::Centralized: {
      TrialResult r;
      if (eps == 0.0) {
        const auto c = centralized::solve_centralized(channels, cfg);
        r.feasible = c.outcome == centralized::Outcome::Feasible;
        r.converged = c.status == conic::SolveStatus::Optimal;
        r.power = c.sdp_objective;
      } else {
        const auto c = robust::solve_robust_centralized(channels, cfg, unc);
        r.feasible = c.outcome == centralized::Outcome::Feasible;
        r.converged = c.status == conic::SolveStatus::Optimal;
        r.power = c.objective;
      }
      return r;
    }
    case Pipeline::Sdbf: {
      const auto tr = eps == 0.0 ? sdbf::run_sdbf(channels, cfg, admm_options(spec))
                                 : robust::run_robust_sdbf(channels, cfg, unc, admm_options(spec));
      return from_trace(tr, channels, cfg, eps);
    }
    case Pipeline::Adbf:
      return from_trace(run_async_trace(channels, cfg, async_for(spec, cfg), spec, eps), channels, cfg, eps);
  }
  return {};
}

std::vector<Table> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto& id = spec.id;
  if (id == "feasibility_vs_gamma") return feasibility_tables(spec, {spec.eps});
  if (id == "feasibility_vs_eps") return feasibility_tables(spec, spec.eps_grid);
  if (id == "power_vs_gamma") return power_vs_gamma(spec);
  if (id == "power_per_realization") return power_per_realization(spec);
  if (id == "accuracy_vs_iter") return accuracy_vs_iter(spec);
  if (id == "convergence_vs_S") return convergence_sweep(spec, true);
  if (id == "convergence_vs_tau") return convergence_sweep(spec, false);
  if (id == "sumrate_bl_vs_somp") return sumrate_bl_vs_somp(spec);
  throw ConfigError("unknown experiment: " + id);
}

CompareReport compare_pipelines(const ChannelSet& channels, const SystemConfig& cfg, const ExperimentSpec& spec) {
  CompareReport rep;
  const auto cen = centralized::solve_centralized(channels, cfg);
  {
    PipelineRow r;
    r.pipeline = "centralized";
    r.feasible = cen.outcome == centralized::Outcome::Feasible;
    r.converged = cen.status == conic::SolveStatus::Optimal;
    r.power = cen.sdp_objective;
    if (cen.beamformers) r.min_sinr_db = min_sinr_db(*cen.beamformers, channels, cfg);
    rep.rows.push_back(r);
  }
  const auto sd = sdbf::run_sdbf(channels, cfg, admm_options(spec));
  rep.rows.push_back(trace_row("sdbf", sd, channels, cfg));
  const auto ad = run_async_trace(channels, cfg, async_for(spec, cfg), spec, 0.0);
  rep.rows.push_back(trace_row("adbf", ad, channels, cfg));
  adbf::AsyncConfig sync = async_for(spec, cfg);
  sync.S = cfg.cells;
  sync.p = 1.0;
  sync.tau = 1;
  sync.Q = spec.max_outer;
  const auto as = adbf::run_adbf(channels, cfg, sync, async_options(spec));
  rep.rows.push_back(trace_row("adbf_sync", as, channels, cfg));

  const double cen_p = cen.sdp_objective;
  if (sd.summary.converged && cen.outcome == centralized::Outcome::Feasible) {
    const double gap = std::abs(sd.summary.final_power - cen_p) / cen_p;
    rep.checks.push_back({"sdbf_vs_centralized_gap", gap <= 0.02, false, "gap=" + format_number(gap)});
  } else {
    rep.checks.push_back(skipped("sdbf_vs_centralized_gap", "sdbf not converged or centralized infeasible"));
  }
  {
    const bool same = metrics::power_series(sd) == metrics::power_series(as) &&
                      sd.consensus.size() == as.consensus.size() && sd.consensus == as.consensus;
    rep.checks.push_back({"adbf_sync_equals_sdbf", same, false, same ? "bitwise identical" : "traces differ"});
  }
  if (spec.eps > 0.0) {
    const auto unc = robust::UncertaintyModel::spherical(spec.eps);
    const auto rob = robust::solve_robust_centralized(channels, cfg, unc);
    PipelineRow r;
    r.pipeline = "robust_centralized";
    r.feasible = rob.outcome == centralized::Outcome::Feasible;
    r.converged = rob.status == conic::SolveStatus::Optimal;
    r.power = rob.objective;
    if (rob.beamformers) r.min_sinr_db = min_sinr_db(*rob.beamformers, channels, cfg);
    rep.rows.push_back(r);
    const auto rad = run_async_trace(channels, cfg, async_for(spec, cfg), spec, spec.eps);
    rep.rows.push_back(trace_row("robust_adbf", rad, channels, cfg));
    if (r.feasible && cen.outcome == centralized::Outcome::Feasible) {
      rep.checks.push_back({"robust_ge_nominal", rob.objective >= cen_p * (1.0 - 1e-6), false,
                            "robust=" + format_number(rob.objective) + " nominal=" + format_number(cen_p)});
    } else {
      rep.checks.push_back(skipped("robust_ge_nominal", "robust or nominal problem infeasible"));
    }
    if (rob.beamformers) {
      const double m = rob.margins.minCoeff();
      rep.checks.push_back({"robust_margin", m >= -1e-4, false, "min_margin=" + format_number(m)});
    } else {
      rep.checks.push_back(skipped("robust_margin", "no robust solution"));
    }
    if (rad.summary.converged && ad.summary.converged) {
      const bool ok = rad.summary.final_power >= ad.summary.final_power * (1.0 - 1e-3);
      rep.checks.push_back({"robust_adbf_ge_adbf", ok, false,
                            "robust=" + format_number(rad.summary.final_power) +
                                " nominal=" + format_number(ad.summary.final_power)});
    } else {
      rep.checks.push_back(skipped("robust_adbf_ge_adbf", "an ADBF run did not converge"));
    }
  }
  return rep;
}

Table report_table(const CompareReport& report) {
  Table t{"compare", {"pipeline", "feasible", "converged", "power", "power_dbm", "min_sinr_db", "iterations"}, {}};
  for (const auto& r : report.rows) {
    t.add({r.pipeline, r.feasible ? "1" : "0", r.converged ? "1" : "0", format_number(r.power),
           format_number(metrics::to_dbm(r.power)), format_number(r.min_sinr_db), std::to_string(r.iterations)});
  }
  return t;
}

int VerifyReport::violations() const {
  return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const Check& c) { return !c.passed; }));
}

VerifyReport verify(const ExperimentSpec& spec) {
  spec.validate();
  const auto per_trial = parallel_map<std::vector<Check>>(spec.trials, spec.threads, [&](int t) {
    std::vector<Check> out;
    const SystemConfig cfg = trial_config(spec, t);
    const auto ch = sample_channels(cfg, cfg.seed);
    try {
      auto rep = compare_pipelines(ch, cfg, spec);
      out = std::move(rep.checks);
      if (spec.eps > 0.0) {
        const auto unc = robust::UncertaintyModel::spherical(spec.eps);
        const auto rob = robust::solve_robust_centralized(ch, cfg, unc);
        if (rob.beamformers) {
          Rng rng(derive_seed(cfg.seed, {0x5a3u}));
          const double m = robust::sampled_min_margin(*rob.beamformers, ch, unc, cfg, 2000, rng);
          out.push_back({"robust_sampled_margin", m >= -1e-6 * cfg.sinr_target, false, "min=" + format_number(m)});
        } else {
          out.push_back(skipped("robust_sampled_margin", "no robust solution"));
        }
      }
    } catch (const std::exception& e) {
      out.push_back({"pipeline_error", false, false, e.what()});
    }
    for (auto& c : out) c.name = "trial" + std::to_string(t + 1) + "." + c.name;
    return out;
  });
  VerifyReport rep;
  rep.instances = spec.trials;
  for (const auto& v : per_trial) rep.checks.insert(rep.checks.end(), v.begin(), v.end());
  const auto& s = spec.system;
  const auto central = metrics::signaling_overhead(metrics::OverheadMode::Centralized, s.cells, s.users, s.antennas, 1);
  const auto expect_central = static_cast<std::uint64_t>(2 * s.antennas * s.users * s.cells * (s.cells - 1));
  rep.checks.push_back({"overhead.centralized", central == expect_central, false, std::to_string(central)});
  const auto per_iter = metrics::signaling_overhead(metrics::OverheadMode::Adbf, s.cells, s.users, s.antennas, 7);
  rep.checks.push_back(
      {"overhead.adbf", per_iter == static_cast<std::uint64_t>(7 * s.cells * s.users), false, std::to_string(per_iter)});
  return rep;
}

Table verify_table(const VerifyReport& report) {
  Table t{"verify", {"check", "status", "detail"}, {}};
  for (const auto& c : report.checks) t.add({c.name, c.skipped ? "skipped" : (c.passed ? "pass" : "FAIL"), c.detail});
  return t;
}

}  // namespace mccbf::harness
