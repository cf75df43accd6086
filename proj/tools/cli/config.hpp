#pragma once

// Scenario files: sectioned key = value text.
//
//   [equation]  r m q gamma delta c_s gamma_tilde normalized
//   [grid]      l N auto_domain max_doublings tail_tol
//   [solver]    epsilon tol max_iters stop_mode mpe mpe_width mpe_max_cycles
//               mpe_degeneracy_floor mpe_guard_factor dealias
//   [evolve]    dt (one value or a list) t_end stage_tol stage_max_sweeps
//               projection sample_every dealias profile refinement sign
//               speed_window snapshot_every
//   [scenario]  kind factor centers speeds study c_min c_max c_stride q_list
//               x_min x_max fit degree amplitude_t_min speed_t_min
//               min_separation peak_threshold
//   [output]    directory formats plot_scripts
//
// Every key is checked against this table and every value is parsed before
// any computation starts.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "benjamin/evolve.hpp"
#include "benjamin/io.hpp"
#include "benjamin/pulse.hpp"
#include "benjamin/solitary.hpp"
#include "benjamin/study.hpp"

namespace benjamin::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EquationSection {
  EquationParams params;            // c_s = 0 when not given
  std::optional<double> gamma_tilde;
  bool normalized = false;          // solve the normalized profile equation
  bool has_c_s = false;

  /// Physical parameters (gamma_tilde resolved against c_s).
  EquationParams resolved() const {
    EquationParams p = params;
    if (gamma_tilde && !normalized) {
      EquationParams unit = p;
      unit.gamma = 0.0;
      p.gamma = *gamma_tilde * gamma_max(unit);
    }
    return p;
  }

  ProfileEquation profile_equation() const {
    if (normalized) return ProfileEquation::normalized(params.q, params.r, params.m, *gamma_tilde);
    return ProfileEquation::general(resolved());
  }
};

struct GridSection {
  double l = 128.0;
  int n = 2048;
  bool auto_domain = false;
  int max_doublings = 2;
  double tail_tol = 1e-8;

  PeriodicGrid grid() const { return PeriodicGrid(l, n); }
};

struct EvolveSection {
  StepperConfig stepper;
  std::vector<double> dts;  // one run per entry
  std::string profile;      // load instead of generating (path relative to the config)
  TrackOptions track{PeakSign::elevation, PeakRefinement::spectral};
  int speed_window = 16;
  int snapshot_every = 0;   // in samples; 0 = no snapshots
};

struct ScenarioSection {
  std::optional<std::string> kind;
  double factor = 1.0;
  std::vector<double> centers;
  std::vector<double> speeds;
  std::string study;
  double c_min = 1.1, c_max = 10.0, c_stride = 0.1;
  std::vector<int> q_list;
  std::optional<double> x_min;
  std::optional<double> x_max;
  DecayModel fit = DecayModel::automatic;
  int degree = 0;
  double amplitude_t_min = 20.0;
  double speed_t_min = 40.0;
  double min_separation = 10.0;
  double peak_threshold = 0.05;
};

struct OutputSection {
  std::optional<std::string> directory;
  bool csv = true;
  bool json = false;
  bool plot_scripts = true;
};

struct ScenarioConfig {
  EquationSection equation;
  GridSection grid;
  PetviashviliConfig solver;
  EvolveSection evolve;
  ScenarioSection scenario;
  OutputSection output;
  std::filesystem::path source;          // config file, for relative paths
  std::map<std::string, std::string> echo;  // section.key -> raw value
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"equation", {"r", "m", "q", "gamma", "delta", "c_s", "gamma_tilde", "normalized"}},
      {"grid", {"l", "N", "auto_domain", "max_doublings", "tail_tol"}},
      {"solver",
       {"epsilon", "tol", "max_iters", "stop_mode", "mpe", "mpe_width", "mpe_max_cycles", "mpe_degeneracy_floor",
        "mpe_guard_factor", "dealias"}},
      {"evolve",
       {"dt", "t_end", "stage_tol", "stage_max_sweeps", "projection", "sample_every", "dealias", "profile",
        "refinement", "sign", "speed_window", "snapshot_every"}},
      {"scenario",
       {"kind", "factor", "centers", "speeds", "study", "c_min", "c_max", "c_stride", "q_list", "x_min", "x_max",
        "fit", "degree", "amplitude_t_min", "speed_t_min", "min_separation", "peak_threshold"}},
      {"output", {"directory", "formats", "plot_scripts"}},
  };
  return s;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(boost::property_tree::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::optional<double> real(const std::string& sec, const std::string& key) const {
    const auto v = raw(sec, key);
    if (!v) return std::nullopt;
    try {
      return io::parse_double(*v);
    } catch (const std::exception&) {
      throw ConfigError("[" + sec + "] " + key + ": expected a number, got '" + *v + "'");
    }
  }

  std::optional<int> integer(const std::string& sec, const std::string& key) const {
    const auto v = raw(sec, key);
    if (!v) return std::nullopt;
    int out = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), out);
    if (res.ec != std::errc() || res.ptr != v->data() + v->size())
      throw ConfigError("[" + sec + "] " + key + ": expected an integer, got '" + *v + "'");
    return out;
  }

  std::optional<bool> boolean(const std::string& sec, const std::string& key) const {
    const auto v = raw(sec, key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "on" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "off" || *v == "no" || *v == "0") return false;
    throw ConfigError("[" + sec + "] " + key + ": expected true/false, got '" + *v + "'");
  }

  std::optional<std::vector<double>> reals(const std::string& sec, const std::string& key) const {
    const auto v = raw(sec, key);
    if (!v) return std::nullopt;
    std::vector<double> out;
    for (const auto& item : split_list(*v)) {
      try {
        out.push_back(io::parse_double(item));
      } catch (const std::exception&) {
        throw ConfigError("[" + sec + "] " + key + ": '" + item + "' is not a number");
      }
    }
    return out;
  }

  std::optional<std::vector<int>> integers(const std::string& sec, const std::string& key) const {
    const auto v = reals(sec, key);
    if (!v) return std::nullopt;
    std::vector<int> out;
    for (double x : *v) {
      if (x != std::round(x)) throw ConfigError("[" + sec + "] " + key + ": expected integers");
      out.push_back(static_cast<int>(x));
    }
    return out;
  }

 private:
  const boost::property_tree::ptree& tree_;
};

template <class T>
void set_if(T& target, const std::optional<T>& v) {
  if (v) target = *v;
}

}  // namespace detail

inline ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& source = {}) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }

  ScenarioConfig cfg;
  cfg.source = source;
  const auto& schema = detail::schema();
  for (const auto& [section, body] : tree) {
    const auto it = schema.find(section);
    if (it == schema.end()) {
      if (!body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
      throw ConfigError("unknown section [" + section + "]");
    }
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
      cfg.echo[section + "." + key] = detail::trim(value.data());
    }
  }

  const detail::Reader rd(tree);
  using detail::set_if;

  // [equation]
  auto& eq = cfg.equation;
  auto& p = eq.params;
  set_if(p.r, rd.real("equation", "r"));
  set_if(p.m, rd.integer("equation", "m"));
  set_if(p.q, rd.integer("equation", "q"));
  set_if(p.gamma, rd.real("equation", "gamma"));
  set_if(p.delta, rd.real("equation", "delta"));
  if (auto c = rd.real("equation", "c_s")) {
    p.c_s = *c;
    eq.has_c_s = true;
  }
  eq.gamma_tilde = rd.real("equation", "gamma_tilde");
  set_if(eq.normalized, rd.boolean("equation", "normalized"));
  if (eq.gamma_tilde && rd.raw("equation", "gamma"))
    throw ConfigError("[equation] gives both gamma and gamma_tilde");
  if (eq.normalized) {
    if (!eq.gamma_tilde) throw ConfigError("[equation] normalized = true needs gamma_tilde");
    if (eq.has_c_s || rd.raw("equation", "delta"))
      throw ConfigError("[equation] the normalized equation fixes c_s = delta = 1; remove them");
    p.c_s = 1.0;
    p.delta = 1.0;
    eq.has_c_s = true;
  }
  try {
    p.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[equation] ") + e.what());
  }

  // [grid]
  set_if(cfg.grid.l, rd.real("grid", "l"));
  set_if(cfg.grid.n, rd.integer("grid", "N"));
  set_if(cfg.grid.auto_domain, rd.boolean("grid", "auto_domain"));
  set_if(cfg.grid.max_doublings, rd.integer("grid", "max_doublings"));
  set_if(cfg.grid.tail_tol, rd.real("grid", "tail_tol"));
  try {
    (void)cfg.grid.grid();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[grid] ") + e.what());
  }
  if (cfg.grid.max_doublings < 0) throw ConfigError("[grid] max_doublings must be >= 0");

  // [solver]
  auto& sv = cfg.solver;
  if (auto e = rd.real("solver", "epsilon")) sv.epsilon = *e;
  set_if(sv.tol, rd.real("solver", "tol"));
  set_if(sv.max_iters, rd.integer("solver", "max_iters"));
  if (auto s = rd.raw("solver", "stop_mode")) {
    try {
      sv.stop_mode = parse_stop_mode(*s);
    } catch (const std::exception& e) {
      throw ConfigError(std::string("[solver] ") + e.what());
    }
  }
  set_if(sv.dealias, rd.boolean("solver", "dealias"));
  const bool mpe = rd.boolean("solver", "mpe").value_or(true);
  if (mpe) {
    accel::MpeConfig m;
    set_if(m.width, rd.integer("solver", "mpe_width"));
    set_if(m.max_cycles, rd.integer("solver", "mpe_max_cycles"));
    set_if(m.degeneracy_floor, rd.real("solver", "mpe_degeneracy_floor"));
    set_if(m.guard_factor, rd.real("solver", "mpe_guard_factor"));
    sv.accel = m;
  } else {
    sv.accel.reset();
  }
  try {
    sv.validate(p.q);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("[solver] ") + e.what());
  }

  // [evolve]
  auto& ev = cfg.evolve;
  auto& st = ev.stepper;
  if (auto d = rd.reals("evolve", "dt")) {
    if (d->empty()) throw ConfigError("[evolve] dt is empty");
    ev.dts = *d;
    st.dt = d->front();
  } else {
    ev.dts = {st.dt};
  }
  set_if(st.t_end, rd.real("evolve", "t_end"));
  set_if(st.stage_tol, rd.real("evolve", "stage_tol"));
  set_if(st.stage_max_sweeps, rd.integer("evolve", "stage_max_sweeps"));
  set_if(st.projection, rd.boolean("evolve", "projection"));
  set_if(st.sample_every, rd.integer("evolve", "sample_every"));
  set_if(st.dealias, rd.boolean("evolve", "dealias"));
  set_if(ev.profile, rd.raw("evolve", "profile"));
  if (auto r = rd.raw("evolve", "refinement")) {
    if (*r == "quadratic") ev.track.refinement = PeakRefinement::quadratic;
    else if (*r == "spectral") ev.track.refinement = PeakRefinement::spectral;
    else throw ConfigError("[evolve] refinement must be quadratic or spectral");
  }
  if (auto s = rd.raw("evolve", "sign")) {
    if (*s == "elevation") ev.track.sign = PeakSign::elevation;
    else if (*s == "depression") ev.track.sign = PeakSign::depression;
    else throw ConfigError("[evolve] sign must be elevation or depression");
  }
  set_if(ev.speed_window, rd.integer("evolve", "speed_window"));
  set_if(ev.snapshot_every, rd.integer("evolve", "snapshot_every"));
  for (double dt : ev.dts) {
    StepperConfig probe = st;
    probe.dt = dt;
    try {
      probe.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("[evolve] ") + e.what());
    }
  }
  if (ev.speed_window < 2) throw ConfigError("[evolve] speed_window must be >= 2");
  if (ev.snapshot_every < 0) throw ConfigError("[evolve] snapshot_every must be >= 0");

  // [scenario]
  auto& sc = cfg.scenario;
  sc.kind = rd.raw("scenario", "kind");
  set_if(sc.factor, rd.real("scenario", "factor"));
  set_if(sc.centers, rd.reals("scenario", "centers"));
  set_if(sc.speeds, rd.reals("scenario", "speeds"));
  set_if(sc.study, rd.raw("scenario", "study"));
  set_if(sc.c_min, rd.real("scenario", "c_min"));
  set_if(sc.c_max, rd.real("scenario", "c_max"));
  set_if(sc.c_stride, rd.real("scenario", "c_stride"));
  set_if(sc.q_list, rd.integers("scenario", "q_list"));
  sc.x_min = rd.real("scenario", "x_min");
  sc.x_max = rd.real("scenario", "x_max");
  if (auto f = rd.raw("scenario", "fit")) {
    if (*f == "auto") sc.fit = DecayModel::automatic;
    else if (*f == "exp1") sc.fit = DecayModel::exp1;
    else if (*f == "exp2") sc.fit = DecayModel::exp2;
    else if (*f == "rational") sc.fit = DecayModel::rational;
    else throw ConfigError("[scenario] fit must be auto, exp1, exp2 or rational");
  }
  set_if(sc.degree, rd.integer("scenario", "degree"));
  set_if(sc.amplitude_t_min, rd.real("scenario", "amplitude_t_min"));
  set_if(sc.speed_t_min, rd.real("scenario", "speed_t_min"));
  set_if(sc.min_separation, rd.real("scenario", "min_separation"));
  set_if(sc.peak_threshold, rd.real("scenario", "peak_threshold"));
  if (!(sc.factor > 0.0)) throw ConfigError("[scenario] factor must be positive");
  if (!sc.study.empty() && sc.study != "amp-vs-q" && sc.study != "amp-vs-speed" && sc.study != "decay")
    throw ConfigError("[scenario] study must be amp-vs-q, amp-vs-speed or decay");
  if (sc.degree < 0) throw ConfigError("[scenario] degree must be >= 0");
  for (int q : sc.q_list)
    if (q < 1) throw ConfigError("[scenario] q_list entries must be >= 1");

  // [output]
  cfg.output.directory = rd.raw("output", "directory");
  if (auto f = rd.raw("output", "formats")) {
    cfg.output.csv = cfg.output.json = false;
    for (const auto& item : detail::split_list(*f)) {
      if (item == "csv") cfg.output.csv = true;
      else if (item == "json") cfg.output.json = true;
      else throw ConfigError("[output] formats entries must be csv or json");
    }
    if (!cfg.output.csv && !cfg.output.json) throw ConfigError("[output] formats is empty");
  }
  set_if(cfg.output.plot_scripts, rd.boolean("output", "plot_scripts"));
  return cfg;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  return parse_config(in, path);
}

}  // namespace benjamin::cli
