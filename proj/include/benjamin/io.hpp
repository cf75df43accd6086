#pragma once

// Text serialization. Every float is written with 17 significant digits.
//
// Profile files:
//
//   # benjamin-profile 1
//   # l = 128
//   # N = 2048
//   # r = 0.5
//   ...                      (m, q, gamma, delta, c_s, optional t and extras)
//   # columns: x phi
//   -128 1.2345678901234567e-05
//   ...
//
// CSV files start with a "# <schema> <version>" comment line followed by
// the column header.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "benjamin/decay.hpp"
#include "benjamin/dispersion.hpp"
#include "benjamin/error.hpp"
#include "benjamin/evolve.hpp"
#include "benjamin/fit.hpp"
#include "benjamin/pulse.hpp"
#include "benjamin/solitary.hpp"
#include "benjamin/spectral.hpp"
#include "benjamin/study.hpp"

namespace benjamin::io {

inline constexpr int profile_format_version = 1;
inline constexpr int record_csv_version = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e) throw FormatError("not a number: '" + s + "'");
  return v;
}

// ---------------------------------------------------------------- profiles

struct ProfileFile {
  PeriodicGrid grid{1.0, 8};
  EquationParams params;
  std::optional<double> time;
  std::map<std::string, std::string> extras;  // free-form metadata lines
  SpectralField field{PeriodicGrid{1.0, 8}};
};

inline void write_profile(std::ostream& os, const SpectralField& f, const EquationParams& p,
                          std::optional<double> time = std::nullopt,
                          const std::map<std::string, std::string>& extras = {}) {
  const auto& g = f.grid();
  os << "# benjamin-profile " << profile_format_version << '\n';
  os << "# l = " << fmt(g.half_length()) << '\n';
  os << "# N = " << g.size() << '\n';
  os << "# r = " << fmt(p.r) << '\n';
  os << "# m = " << p.m << '\n';
  os << "# q = " << p.q << '\n';
  os << "# gamma = " << fmt(p.gamma) << '\n';
  os << "# delta = " << fmt(p.delta) << '\n';
  os << "# c_s = " << fmt(p.c_s) << '\n';
  if (time) os << "# t = " << fmt(*time) << '\n';
  for (const auto& [k, v] : extras) os << "# " << k << " = " << v << '\n';
  os << "# columns: x phi\n";
  const auto& v = f.values();
  for (int j = 0; j < g.size(); ++j) os << fmt(g.node(j)) << ' ' << fmt(v[j]) << '\n';
}

inline ProfileFile read_profile(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# benjamin-profile ", 0) != 0)
    throw FormatError("missing profile header line");
  if (std::stoi(line.substr(19)) != profile_format_version) throw FormatError("unsupported profile version");
  std::map<std::string, std::string> head;
  std::vector<double> xs, vs;
  bool columns = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (columns) throw FormatError("header line after data columns");
      if (line == "# columns: x phi") {
        columns = true;
        continue;
      }
      const auto eq = line.find(" = ");
      if (eq == std::string::npos || line.size() < 3) throw FormatError("malformed header line: " + line);
      head[line.substr(2, eq - 2)] = line.substr(eq + 3);
      continue;
    }
    if (!columns) throw FormatError("data before the column line");
    std::istringstream row(line);
    std::string a, b, extra;
    if (!(row >> a >> b) || (row >> extra)) throw FormatError("profile rows need exactly two columns");
    xs.push_back(parse_double(a));
    vs.push_back(parse_double(b));
  }
  auto take = [&](const std::string& k) {
    const auto it = head.find(k);
    if (it == head.end()) throw FormatError("profile header lacks '" + k + "'");
    std::string v = it->second;
    head.erase(it);
    return v;
  };
  ProfileFile out;
  const double l = parse_double(take("l"));
  const int n = std::stoi(take("N"));
  out.grid = PeriodicGrid(l, n);
  out.params.r = parse_double(take("r"));
  out.params.m = std::stoi(take("m"));
  out.params.q = std::stoi(take("q"));
  out.params.gamma = parse_double(take("gamma"));
  out.params.delta = parse_double(take("delta"));
  out.params.c_s = parse_double(take("c_s"));
  if (head.count("t")) out.time = parse_double(take("t"));
  out.extras = std::move(head);
  if (static_cast<int>(vs.size()) != n)
    throw FormatError("profile has " + std::to_string(vs.size()) + " rows, header says N = " + std::to_string(n));
  for (int j = 0; j < n; ++j)
    if (std::abs(xs[j] - out.grid.node(j)) > 1e-9 * std::max(1.0, l))
      throw FormatError("row " + std::to_string(j) + " is not at grid node x_j");
  out.field = SpectralField::from_values(out.grid, std::move(vs));
  return out;
}

inline ProfileFile read_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open profile file '" + path + "'");
  return read_profile(in);
}

// ---------------------------------------------------------------- CSV

inline std::string csv_cell(std::optional<double> v) { return v ? fmt(*v) : std::string(); }

inline void write_record_csv(std::ostream& os, const SimulationRecord& rec) {
  os << "# benjamin-record " << record_csv_version << '\n';
  os << "t,I_h,E_h,C_h,peak_amplitude,peak_position,est_speed\n";
  const bool tracked = rec.pulses.size() == rec.times.size();
  for (std::size_t i = 0; i < rec.times.size(); ++i) {
    const auto& inv = rec.invariants[i];
    os << fmt(rec.times[i]) << ',' << fmt(inv.momentum) << ',' << fmt(inv.energy) << ',' << fmt(inv.mass);
    if (tracked) {
      const auto& p = rec.pulses[i];
      os << ',' << fmt(p.amplitude) << ',' << fmt(p.position) << ',' << csv_cell(p.speed_estimate) << '\n';
    } else {
      os << ",,,\n";
    }
  }
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceEntry>& trace) {
  os << "# benjamin-trace 1\n";
  os << "iteration,kind,sfe,residual\n";
  for (const auto& e : trace) {
    const char* kind = e.kind == IterateKind::seed ? "seed" : e.kind == IterateKind::base ? "base" : "extrapolant";
    os << e.iteration << ',' << kind << ',' << fmt(e.sfe) << ',' << fmt(e.residual) << '\n';
  }
}

inline void write_phase_csv(std::ostream& os, const std::vector<PhasePoint>& pts) {
  os << "# benjamin-phase 1\n";
  os << "phi,dphi\n";
  for (const auto& p : pts) os << fmt(p.value) << ',' << fmt(p.slope) << '\n';
}

inline void write_speed_phase_csv(std::ostream& os, const SpeedPhase& sp) {
  os << "# benjamin-speed-phase 1\n";
  os << "t,phase_error,speed\n";
  // speed[k] belongs to speed_t[k], which is t[k + window - 1]
  const std::size_t lag = sp.t.size() - sp.speed.size();
  for (std::size_t i = 0; i < sp.t.size(); ++i) {
    os << fmt(sp.t[i]) << ',' << fmt(sp.phase_error[i]) << ',';
    if (i >= lag) os << fmt(sp.speed[i - lag]);
    os << '\n';
  }
}

inline void write_envelope_csv(std::ostream& os, const std::vector<EnvelopePoint>& env) {
  os << "# benjamin-envelope 1\n";
  os << "x,envelope\n";
  for (const auto& e : env) os << fmt(e.x) << ',' << fmt(e.value) << '\n';
}

/// parameter_name is "c_s" or "q".
inline void write_study_csv(std::ostream& os, const StudyResult& s, const std::string& parameter_name,
                            std::optional<int> gkdv_q = std::nullopt) {
  os << "# benjamin-study 1\n";
  os << parameter_name << ",amplitude,converged,iterations,residual";
  if (gkdv_q) os << ",gkdv_amplitude";
  os << ",error\n";
  for (const auto& r : s.rows) {
    os << (parameter_name == "q" ? std::to_string(static_cast<int>(r.parameter)) : fmt(r.parameter)) << ','
       << (r.error.empty() ? fmt(r.amplitude) : std::string()) << ',' << (r.converged ? 1 : 0) << ','
       << r.iterations << ',' << (r.error.empty() ? fmt(r.residual) : std::string());
    if (gkdv_q) os << ',' << fmt(gkdv_amplitude(r.parameter, *gkdv_q));
    std::string err = r.error;
    for (char& c : err)
      if (c == ',' || c == '\n') c = ';';
    os << ',' << err << '\n';
  }
}

// ---------------------------------------------------------------- JSON

using nlohmann::json;

/// Pretty-printed JSON with floats at 17 significant digits (non-finite
/// values become null).
inline void write_json(std::ostream& os, const json& j, int indent = 2, int level = 0) {
  const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * level), ' ');
  if (j.is_object() && !j.empty()) {
    os << "{\n";
    bool first = true;
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (!first) os << ",\n";
      first = false;
      os << pad << json(it.key()).dump() << ": ";
      write_json(os, it.value(), indent, level + 1);
    }
    os << '\n' << close << '}';
  } else if (j.is_array() && !j.empty()) {
    os << "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i) os << ",\n";
      os << pad;
      write_json(os, j[i], indent, level + 1);
    }
    os << '\n' << close << ']';
  } else if (j.is_number_float()) {
    const double x = j.get<double>();
    os << (std::isfinite(x) ? fmt(x) : std::string("null"));
  } else {
    os << j.dump();
  }
}

inline json to_json(const EquationParams& p) {
  return {{"r", p.r}, {"m", p.m}, {"q", p.q}, {"gamma", p.gamma}, {"delta", p.delta}, {"c_s", p.c_s}};
}

inline json to_json(const FitResult& f) {
  return {{"model", f.tag()},
          {"coefficients", f.coeffs},
          {"sse", f.sse},
          {"r2", f.r2},
          {"n_points", f.n_points},
          {"converged", f.converged},
          {"iterations", f.iterations}};
}

inline json to_json(const DispersionReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j = {{"gamma", r.gamma},
            {"gamma_max", r.gamma_max},
            {"gamma_star", r.gamma_star},
            {"regime", to_string(r.regime)},
            {"x_minus", opt(r.x_minus)},
            {"x_plus", opt(r.x_plus)},
            {"x_phi_max", r.x_phi_max},
            {"x_psi_max", r.x_psi_max},
            {"x_c", r.x_c},
            {"x_p", r.x_p},
            {"closed_form", r.closed_form},
            {"phase_speed_sign", r.phase_speed_sign},
            {"group_velocity_sign", r.group_velocity_sign}};
  if (r.closed_form) j["discriminant"] = r.discriminant;
  return j;
}

}  // namespace benjamin::io
