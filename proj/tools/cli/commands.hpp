#pragma once

// The six scenario commands. Each one writes through OutputDir and leaves
// statistics in the manifest; run_command maps failures to exit codes:
//
//   0  success
//   1  bad usage, config or input file
//   2  inadmissible gamma or grid mismatch
//   3  profile iteration did not converge (trace still written)
//   4  stage divergence during time stepping (partial outputs)

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "benjamin/decay.hpp"
#include "benjamin/dispersion.hpp"
#include "benjamin/evolve.hpp"
#include "benjamin/fit.hpp"
#include "benjamin/invariants.hpp"
#include "benjamin/io.hpp"
#include "benjamin/pulse.hpp"
#include "benjamin/solitary.hpp"
#include "benjamin/study.hpp"
#include "cli/config.hpp"
#include "cli/manifest.hpp"

namespace benjamin::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 1,
  exit_inadmissible = 2,
  exit_nonconvergence = 3,
  exit_divergence = 4,
};

class GridMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"generate", "evolve", "perturb", "collide", "study", "dispersion"};
  return names;
}

struct Context {
  const ScenarioConfig& cfg;
  OutputDir& out;
  RunManifest& manifest;
  int threads = 1;
  std::ostream& log;
  Stopwatch clock{};
};

namespace detail {

using nlohmann::json;

inline std::map<std::string, std::string> profile_extras(const WaveProfile& p, const EquationSection& eq) {
  std::map<std::string, std::string> x = {{"converged", p.converged ? "true" : "false"},
                                          {"iterations", std::to_string(p.iterations)},
                                          {"residual", io::fmt(p.residual)},
                                          {"sfe", io::fmt(p.sfe)},
                                          {"nonlinear_coeff", io::fmt(p.equation.nonlinear_coeff)}};
  if (eq.normalized) x["gamma_tilde"] = io::fmt(*eq.gamma_tilde);
  return x;
}

inline json profile_summary(const AutoDomainResult& r) {
  const auto& p = r.profile;
  const auto& g = p.field.grid();
  return {{"converged", p.converged},
          {"iterations", p.iterations},
          {"residual", p.residual},
          {"sfe", p.sfe},
          {"amplitude", p.amplitude()},
          {"l", g.half_length()},
          {"N", g.size()},
          {"domain_doublings", r.doublings},
          {"boundary_tail_ratio", r.tail_ratio},
          {"mpe_cycles", p.accel_stats.cycles},
          {"mpe_accepted_extrapolants", p.accel_stats.accepted},
          {"mpe_rejected_extrapolants", p.accel_stats.rejected},
          {"mpe_degenerate_windows", p.accel_stats.degenerate}};
}

inline AutoDomainResult generate(Context& ctx, const ProfileEquation& eq, const std::vector<double>& centers) {
  const auto& gc = ctx.cfg.grid;
  SeedFn seed = [&](const PeriodicGrid& g) {
    if (centers.empty()) return gkdv_seed(eq, g);
    auto ms = multipulse_seed(eq, g, centers);
    for (auto& w : ms.warnings) ctx.manifest.warnings.push_back(w);
    return ms.field;
  };
  auto r = solve_profile_auto(eq, gc.grid(), ctx.cfg.solver, seed, gc.auto_domain ? gc.max_doublings : 0,
                              gc.tail_tol);
  ctx.log << "profile: " << (r.profile.converged ? "converged" : "NOT converged") << " after "
          << r.profile.iterations << " iterations, residual " << io::fmt(r.profile.residual) << '\n';
  if (r.tail_ratio > gc.tail_tol)
    ctx.manifest.warnings.push_back("profile tail at x = +-l is " + io::fmt(r.tail_ratio) + " of the peak");
  return r;
}

inline void write_profile_outputs(Context& ctx, const AutoDomainResult& r, const std::string& prefix = "") {
  const auto& p = r.profile;
  ctx.out.write(prefix + "profile.txt", [&](std::ostream& os) {
    io::write_profile(os, p.field, p.equation.params, std::nullopt, profile_extras(p, ctx.cfg.equation));
  });
  ctx.out.write(prefix + "trace.csv", [&](std::ostream& os) { io::write_trace_csv(os, p.trace); });
}

inline EquationParams evolution_params(const ScenarioConfig& cfg) {
  if (cfg.equation.normalized)
    throw ConfigError("the normalized profile equation cannot be evolved; give gamma (or gamma_tilde) and c_s");
  return cfg.equation.resolved();
}

/// Initial profile for evolve/perturb: loaded from [evolve] profile or
/// generated. Returns nullopt (after writing the trace) when generation
/// did not converge.
inline std::optional<SpectralField> initial_profile(Context& ctx, const EquationParams& p) {
  const auto& cfg = ctx.cfg;
  if (!cfg.evolve.profile.empty()) {
    std::filesystem::path path = cfg.evolve.profile;
    if (path.is_relative() && !cfg.source.empty()) path = cfg.source.parent_path() / path;
    auto file = io::read_profile(path.string());
    if (!(file.grid == cfg.grid.grid()))
      throw GridMismatch("profile grid (l = " + io::fmt(file.grid.half_length()) + ", N = " +
                         std::to_string(file.grid.size()) + ") differs from the config grid (l = " +
                         io::fmt(cfg.grid.l) + ", N = " + std::to_string(cfg.grid.n) + ")");
    const auto& fp = file.params;
    if (fp.r != p.r || fp.m != p.m || fp.q != p.q || fp.gamma != p.gamma || fp.delta != p.delta)
      ctx.manifest.warnings.push_back("profile file parameters differ from the [equation] section");
    ctx.manifest.statistics["profile_source"] = path.string();
    return file.field;
  }
  auto r = generate(ctx, ProfileEquation::general(p), {});
  write_profile_outputs(ctx, r);
  ctx.manifest.statistics["profile"] = profile_summary(r);
  ctx.manifest.time("profile", ctx.clock.lap());
  if (!r.profile.converged) return std::nullopt;
  if (!(r.profile.field.grid() == cfg.grid.grid()))
    throw GridMismatch("automatic domain growth changed the grid; evolution needs the configured grid");
  return r.profile.field;
}

inline std::string run_suffix(std::size_t i, std::size_t n) { return n > 1 ? "_" + std::to_string(i + 1) : ""; }

struct EvolveRun {
  IntegrationOutcome outcome;
  json summary;
};

inline EvolveRun evolve_one(Context& ctx, const SpectralField& u0, const EquationParams& p, double dt,
                            const std::string& suffix) {
  const auto& ev = ctx.cfg.evolve;
  StepperConfig sc = ev.stepper;
  sc.dt = dt;
  IntegrateOptions opt;
  opt.track = ev.track;
  opt.speed_window = static_cast<std::size_t>(ev.speed_window);
  std::vector<Observer> observers;
  long sample_index = 0;
  if (ev.snapshot_every > 0)
    observers.push_back([&](double t, const SpectralField& u) {
      if (sample_index++ % ev.snapshot_every != 0) return;
      char name[64];
      std::snprintf(name, sizeof name, "snapshots%s/snap_%06ld.txt", suffix.c_str(), sample_index - 1);
      ctx.out.write(name, [&](std::ostream& os) { io::write_profile(os, u, p, t); });
    });
  ctx.log << "evolving: dt = " << io::fmt(dt) << ", t_end = " << io::fmt(sc.t_end) << '\n';
  EvolveRun run{integrate(u0, p, sc, opt, observers), {}};
  const auto& rec = run.outcome.record;
  ctx.out.write("record" + suffix + ".csv", [&](std::ostream& os) { io::write_record_csv(os, rec); });
  const double c_ref = p.c_s;
  const auto sp = speed_and_phase(rec.pulses, c_ref, opt.speed_window);
  ctx.out.write("speed_phase" + suffix + ".csv", [&](std::ostream& os) { io::write_speed_phase_csv(os, sp); });

  const auto& i0 = rec.invariants.front();
  const auto& i1 = rec.invariants.back();
  auto rel = [](double a, double b) { return b != 0.0 ? (a - b) / std::abs(b) : a - b; };
  run.summary = {{"dt", dt},
                 {"t_end", rec.times.back()},
                 {"steps", rec.steps},
                 {"samples", rec.times.size()},
                 {"final_step_shortened", rec.final_step_shortened},
                 {"momentum_drift_relative", rel(i1.momentum, i0.momentum)},
                 {"energy_drift_relative", rel(i1.energy, i0.energy)},
                 {"mass_drift_absolute", i1.mass - i0.mass},
                 {"stage_substeps", rec.stage_stats.substeps},
                 {"stage_sweeps", rec.stage_stats.sweeps},
                 {"stage_max_sweeps", rec.stage_stats.max_sweeps},
                 {"completed", run.outcome.ok()}};
  if (!run.outcome.ok()) {
    const auto& f = *run.outcome.failure;
    run.summary["failure"] = {{"message", f.what()}, {"tau", f.tau()}, {"sweep_history", f.history()}};
    ctx.log << "stage divergence: " << f.what() << '\n';
  }
  return run;
}

inline void write_plot(Context& ctx, const std::string& script) {
  if (ctx.cfg.output.plot_scripts) ctx.out.write("plot.gp", [&](std::ostream& os) { os << script; });
}

inline std::string record_plot(const std::string& suffix) {
  const std::string rec = "record" + suffix + ".csv";
  const std::string sp = "speed_phase" + suffix + ".csv";
  return "set datafile separator ','\nset key autotitle columnhead\nset term pngcairo size 1200,800\n"
         "set output 'record" + suffix + ".png'\nset multiplot layout 2,2\n"
         "plot '" + rec + "' every ::1 using 1:5 with lines\n"
         "plot '" + sp + "' every ::1 using 1:2 with lines\n"
         "plot '" + rec + "' every ::1 using 1:2 with lines\n"
         "plot '" + rec + "' every ::1 using 1:3 with lines\nunset multiplot\n";
}

/// Mean of the tracked amplitude for t >= t_amp and least-squares speed for
/// t >= t_speed.
inline json late_time_fit(const SimulationRecord& rec, double t_amp, double t_speed) {
  double sum = 0.0;
  std::size_t n = 0;
  std::vector<double> ts, xs;
  for (const auto& r : rec.pulses) {
    if (!std::isfinite(r.amplitude)) continue;
    if (r.t >= t_amp) {
      sum += r.amplitude;
      ++n;
    }
    if (r.t >= t_speed) {
      ts.push_back(r.t);
      xs.push_back(r.position);
    }
  }
  json j;
  j["amplitude_t_min"] = t_amp;
  j["speed_t_min"] = t_speed;
  j["amplitude"] = n > 0 ? json(sum / n) : json(nullptr);
  j["speed"] = ts.size() >= 2 ? json(ls_slope(ts, xs)) : json(nullptr);
  return j;
}

inline void write_peaks(Context& ctx, const std::vector<Peak>& peaks, const std::string& name) {
  ctx.out.write(name, [&](std::ostream& os) {
    os << "# benjamin-peaks 1\nrank,position,amplitude\n";
    for (std::size_t i = 0; i < peaks.size(); ++i)
      os << i + 1 << ',' << io::fmt(peaks[i].position) << ',' << io::fmt(peaks[i].amplitude) << '\n';
  });
}

}  // namespace detail

// ------------------------------------------------------------------ generate

inline int cmd_generate(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto eq = cfg.equation.profile_equation();
  auto r = detail::generate(ctx, eq, cfg.scenario.centers);
  ctx.manifest.time("solve", ctx.clock.lap());
  detail::write_profile_outputs(ctx, r);
  ctx.out.write("phase.csv", [&](std::ostream& os) { io::write_phase_csv(os, phase_plot_data(r.profile.field)); });
  auto summary = detail::profile_summary(r);
  summary["gamma"] = eq.params.gamma;
  summary["gamma_max"] = gamma_max(eq.params);
  ctx.out.write_json("summary.json", summary);
  detail::write_plot(ctx,
                     "set datafile separator ','\nset key autotitle columnhead\nset logscale y\n"
                     "set term pngcairo size 1000,700\nset output 'trace.png'\n"
                     "plot 'trace.csv' every ::1 using 1:4 with linespoints, '' every ::1 using 1:3 with lines\n"
                     "unset logscale y\nset datafile separator ' '\nset output 'profile.png'\n"
                     "plot 'profile.txt' using 1:2 with lines notitle\n"
                     "set datafile separator ','\nset output 'phase.png'\n"
                     "plot 'phase.csv' every ::1 using 1:2 with lines notitle\n");
  ctx.manifest.statistics["profile"] = summary;
  return r.profile.converged ? exit_ok : exit_nonconvergence;
}

// ------------------------------------------------------------------ evolve

inline int evolve_initial(Context& ctx, const SpectralField& u0, const EquationParams& p, nlohmann::json& runs,
                          std::vector<IntegrationOutcome>* outcomes = nullptr) {
  const auto& dts = ctx.cfg.evolve.dts;
  int code = exit_ok;
  for (std::size_t i = 0; i < dts.size(); ++i) {
    const auto suffix = detail::run_suffix(i, dts.size());
    auto run = detail::evolve_one(ctx, u0, p, dts[i], suffix);
    ctx.manifest.time("evolve" + suffix, ctx.clock.lap());
    runs.push_back(run.summary);
    if (i == 0) detail::write_plot(ctx, detail::record_plot(suffix));
    const bool ok = run.outcome.ok();
    if (outcomes) outcomes->push_back(std::move(run.outcome));
    if (!ok) {
      code = exit_divergence;
      break;
    }
  }
  return code;
}

inline int cmd_evolve(Context& ctx) {
  const auto p = detail::evolution_params(ctx.cfg);
  const auto u0 = detail::initial_profile(ctx, p);
  if (!u0) return exit_nonconvergence;
  nlohmann::json runs = nlohmann::json::array();
  const int code = evolve_initial(ctx, *u0, p, runs);
  ctx.out.write_json("summary.json", {{"runs", runs}});
  ctx.manifest.statistics["runs"] = runs;
  return code;
}

// ------------------------------------------------------------------ perturb

inline int cmd_perturb(Context& ctx) {
  const auto& sc = ctx.cfg.scenario;
  const auto p = detail::evolution_params(ctx.cfg);
  const auto u0 = detail::initial_profile(ctx, p);
  if (!u0) return exit_nonconvergence;
  const SpectralField start = sc.factor * *u0;
  nlohmann::json runs = nlohmann::json::array();
  std::vector<IntegrationOutcome> outcomes;
  const int code = evolve_initial(ctx, start, p, runs, &outcomes);
  nlohmann::json fits = nlohmann::json::array();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto suffix = detail::run_suffix(i, ctx.cfg.evolve.dts.size());
    auto j = detail::late_time_fit(outcomes[i].record, sc.amplitude_t_min, sc.speed_t_min);
    const auto peaks = find_peaks(outcomes[i].final_state, sc.peak_threshold, sc.min_separation);
    detail::write_peaks(ctx, peaks, "final_peaks" + suffix + ".csv");
    j["dt"] = ctx.cfg.evolve.dts[i];
    j["final_pulses"] = peaks.size();
    fits.push_back(j);
  }
  nlohmann::json summary = {{"factor", sc.factor},
                            {"initial_amplitude", start.max_abs()},
                            {"runs", runs},
                            {"main_pulse", fits}};
  ctx.out.write_json("summary.json", summary);
  ctx.manifest.statistics["main_pulse"] = fits;
  ctx.manifest.statistics["runs"] = runs;
  return code;
}

// ------------------------------------------------------------------ collide

inline int cmd_collide(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& sc = cfg.scenario;
  if (sc.speeds.empty() || sc.speeds.size() != sc.centers.size())
    throw ConfigError("[scenario] collide needs speeds and centers of equal, non-zero length");
  if (cfg.equation.gamma_tilde) throw ConfigError("[scenario] collide shares gamma between pulses; give gamma");
  const auto base = detail::evolution_params(cfg);
  const auto g = cfg.grid.grid();

  struct Pulse {
    double c_s, center, before;
  };
  std::vector<Pulse> pulses;
  SpectralField u0(g);
  nlohmann::json profiles = nlohmann::json::array();
  // admissibility of every speed is checked before any solve
  for (double c : sc.speeds) {
    EquationParams p = base;
    p.c_s = c;
    require_admissible(p);
  }
  for (std::size_t i = 0; i < sc.speeds.size(); ++i) {
    EquationParams p = base;
    p.c_s = sc.speeds[i];
    const auto eq = ProfileEquation::general(p);
    auto prof = solve_profile(gkdv_seed(eq, g), eq, cfg.solver);
    ctx.log << "pulse " << i + 1 << " (c_s = " << io::fmt(p.c_s) << "): " << prof.iterations << " iterations\n";
    const std::string prefix = "pulse" + std::to_string(i + 1) + "_";
    AutoDomainResult r{prof, 0, boundary_tail_ratio(prof.field)};
    detail::write_profile_outputs(ctx, r, prefix);
    profiles.push_back(detail::profile_summary(r));
    if (!prof.converged) {
      ctx.manifest.statistics["profiles"] = profiles;
      return exit_nonconvergence;
    }
    pulses.push_back({p.c_s, sc.centers[i], prof.amplitude()});
    u0 += translate(prof.field, sc.centers[i]);
  }
  ctx.manifest.statistics["profiles"] = profiles;
  ctx.manifest.time("profiles", ctx.clock.lap());

  EquationParams p = base;
  p.c_s = *std::max_element(sc.speeds.begin(), sc.speeds.end());
  nlohmann::json runs = nlohmann::json::array();
  std::vector<IntegrationOutcome> outcomes;
  const int code = evolve_initial(ctx, u0, p, runs, &outcomes);

  // after-collision peaks, tallest matched with the tallest initial pulse
  std::vector<std::size_t> order(pulses.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return pulses[a].before > pulses[b].before; });
  nlohmann::json tables = nlohmann::json::array();
  for (std::size_t k = 0; k < outcomes.size(); ++k) {
    const auto suffix = detail::run_suffix(k, cfg.evolve.dts.size());
    const auto peaks = find_peaks(outcomes[k].final_state, sc.peak_threshold, sc.min_separation, pulses.size());
    ctx.out.write("collision" + suffix + ".csv", [&](std::ostream& os) {
      os << "# benjamin-collision 1\npulse,c_s,center,amplitude_before,amplitude_after,position_after\n";
      for (std::size_t rank = 0; rank < order.size(); ++rank) {
        const auto& pl = pulses[order[rank]];
        os << order[rank] + 1 << ',' << io::fmt(pl.c_s) << ',' << io::fmt(pl.center) << ',' << io::fmt(pl.before)
           << ',';
        if (rank < peaks.size()) os << io::fmt(peaks[rank].amplitude) << ',' << io::fmt(peaks[rank].position);
        else os << ',';
        os << '\n';
      }
    });
    nlohmann::json t = nlohmann::json::array();
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const auto& pl = pulses[order[rank]];
      t.push_back({{"pulse", order[rank] + 1},
                   {"c_s", pl.c_s},
                   {"amplitude_before", pl.before},
                   {"amplitude_after", rank < peaks.size() ? nlohmann::json(peaks[rank].amplitude) : nlohmann::json()}});
    }
    tables.push_back({{"dt", cfg.evolve.dts[k]}, {"pulses", t}});
  }
  ctx.out.write_json("summary.json", {{"runs", runs}, {"amplitudes", tables}});
  ctx.manifest.statistics["runs"] = runs;
  ctx.manifest.statistics["amplitudes"] = tables;
  return code;
}

// ------------------------------------------------------------------ study

inline int cmd_study(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto& sc = cfg.scenario;
  if (sc.study.empty()) throw ConfigError("[scenario] study is required (amp-vs-q, amp-vs-speed or decay)");
  const auto g = cfg.grid.grid();
  auto json_fit = [](const FitResult& f) { return io::to_json(f); };

  if (sc.study == "amp-vs-speed") {
    if (cfg.equation.normalized) throw ConfigError("amp-vs-speed needs the physical equation");
    const auto tmpl = cfg.equation.resolved();
    const auto speeds = stride_range(sc.c_min, sc.c_max, sc.c_stride);
    for (double c : speeds) {
      EquationParams p = tmpl;
      p.c_s = c;
      require_admissible(p);
    }
    const auto res = amplitude_speed_study(tmpl, speeds, g, cfg.solver, ctx.threads);
    ctx.manifest.time("study", ctx.clock.lap());
    for (const auto& w : res.warnings) ctx.manifest.warnings.push_back(w);
    if (cfg.output.csv)
      ctx.out.write("table.csv", [&](std::ostream& os) { io::write_study_csv(os, res, "c_s", tmpl.q); });
    nlohmann::json j;
    j["study"] = sc.study;
    j["fit"] = res.fit ? json_fit(*res.fit) : nlohmann::json();
    j["gkdv_reference"] = {{"alpha", 1.0 / tmpl.q}, {"K", gkdv_amplitude(1.0, tmpl.q)}};
    j["rows"] = res.rows.size();
    j["rows_used"] = res.fit ? res.fit->n_points : 0;
    if (cfg.output.json) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : res.rows)
        rows.push_back({{"c_s", r.parameter},
                        {"amplitude", r.amplitude},
                        {"converged", r.converged},
                        {"iterations", r.iterations},
                        {"error", r.error}});
      j["table"] = rows;
    }
    ctx.out.write_json("fit.json", j);
    detail::write_plot(ctx,
                       "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\n"
                       "set term pngcairo size 1000,700\nset output 'amplitude_speed.png'\n"
                       "plot 'table.csv' every ::1 using 1:2 with points, '' every ::1 using 1:6 with lines\n");
    ctx.manifest.statistics["fit"] = j["fit"];
    return exit_ok;
  }

  if (sc.study == "amp-vs-q") {
    if (sc.q_list.empty()) throw ConfigError("[scenario] amp-vs-q needs q_list");
    std::optional<double> gt;
    EquationParams tmpl = cfg.equation.params;
    if (cfg.equation.normalized) gt = cfg.equation.gamma_tilde;
    else tmpl = cfg.equation.resolved();
    const auto res = amplitude_q_study(tmpl, sc.q_list, gt, g, cfg.solver, ctx.threads);
    ctx.manifest.time("study", ctx.clock.lap());
    for (const auto& w : res.warnings) ctx.manifest.warnings.push_back(w);
    if (cfg.output.csv) ctx.out.write("table.csv", [&](std::ostream& os) { io::write_study_csv(os, res, "q"); });
    if (cfg.output.json) {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : res.rows)
        rows.push_back({{"q", static_cast<int>(r.parameter)},
                        {"amplitude", r.amplitude},
                        {"converged", r.converged},
                        {"iterations", r.iterations},
                        {"error", r.error}});
      ctx.out.write_json("table.json", {{"study", sc.study}, {"rows", rows}});
    }
    detail::write_plot(ctx,
                       "set datafile separator ','\nset key autotitle columnhead\nset term pngcairo size 1000,700\n"
                       "set output 'amplitude_q.png'\nplot 'table.csv' every ::1 using 1:2 with linespoints\n");
    return exit_ok;
  }

  // decay
  const auto eq = cfg.equation.profile_equation();
  auto r = detail::generate(ctx, eq, {});
  ctx.manifest.time("solve", ctx.clock.lap());
  detail::write_profile_outputs(ctx, r);
  const auto& phi = r.profile.field;
  ctx.out.write("phase.csv", [&](std::ostream& os) { io::write_phase_csv(os, phase_plot_data(phi)); });
  ctx.manifest.statistics["profile"] = detail::profile_summary(r);
  if (!r.profile.converged) return exit_nonconvergence;
  const double x_min = sc.x_min.value_or(default_envelope_start(phi, eq.params));
  const double x_max = sc.x_max.value_or(std::numeric_limits<double>::infinity());
  const auto d = decay_study(phi, eq.params.r, x_min, x_max, sc.fit, sc.degree);
  ctx.out.write("envelope.csv", [&](std::ostream& os) { io::write_envelope_csv(os, d.envelope); });
  nlohmann::json fits = nlohmann::json::array();
  for (const auto& f : d.fits) fits.push_back(json_fit(f));
  nlohmann::json j = {{"study", sc.study}, {"x_min", x_min}, {"fits", fits}};
  if (std::isfinite(x_max)) j["x_max"] = x_max;
  ctx.out.write_json("fits.json", j);
  detail::write_plot(ctx,
                     "set datafile separator ','\nset key autotitle columnhead\nset logscale y\n"
                     "set term pngcairo size 1000,700\nset output 'envelope.png'\n"
                     "plot 'envelope.csv' every ::1 using 1:2 with points\n");
  ctx.manifest.statistics["fits"] = fits;
  return exit_ok;
}

// ------------------------------------------------------------------ dispersion

inline int cmd_dispersion(Context& ctx) {
  const auto p = ctx.cfg.equation.resolved();
  const auto rep = classify_dispersion(p);
  auto j = io::to_json(rep);
  j["params"] = io::to_json(p);
  ctx.out.write_json("dispersion.json", j);
  const double x_top = 2.0 * std::max({rep.x_c, rep.x_phi_max, rep.x_plus.value_or(0.0), 1e-12});
  const double k_top = std::sqrt(x_top);
  ctx.out.write("curves.csv", [&](std::ostream& os) {
    os << "# benjamin-dispersion 1\nkappa,phase_speed,group_velocity,F\n";
    const int n = 1000;
    for (int i = 0; i <= n; ++i) {
      const double k = k_top * i / n;
      os << io::fmt(k) << ',' << io::fmt(phase_speed(k, p)) << ',' << io::fmt(group_velocity(k, p)) << ','
         << io::fmt(radiation_function(k * k, p)) << '\n';
    }
  });
  detail::write_plot(ctx,
                     "set datafile separator ','\nset key autotitle columnhead\nset term pngcairo size 1000,700\n"
                     "set output 'dispersion.png'\nset xzeroaxis\n"
                     "plot 'curves.csv' every ::1 using 1:2 with lines, '' every ::1 using 1:3 with lines\n");
  ctx.manifest.statistics["dispersion"] = j;
  return exit_ok;
}

// ------------------------------------------------------------------ dispatch

inline std::filesystem::path default_output_dir(const std::string& command, const ScenarioConfig& cfg) {
  if (cfg.output.directory) return *cfg.output.directory;
  const std::string stem = cfg.source.empty() ? std::string("scenario") : cfg.source.stem().string();
  const char* root = std::getenv("BENJAMIN_OUTPUT_ROOT");
  const std::filesystem::path base = root && *root ? std::filesystem::path(root) : std::filesystem::path("runs");
  return base / (stem + "-" + command);
}

/// Runs one command into dir and writes the manifest. Errors raised
/// before the output directory exists are reported without a manifest.
inline int run_command(const std::string& command, const ScenarioConfig& cfg, const std::filesystem::path& dir,
                       int threads, std::ostream& log) {
  if (std::find(command_names().begin(), command_names().end(), command) == command_names().end()) {
    log << "error: unknown command '" << command << "'\n";
    return exit_usage;
  }
  if (cfg.scenario.kind && *cfg.scenario.kind != command) {
    log << "error: config describes a '" << *cfg.scenario.kind << "' scenario, not '" << command << "'\n";
    return exit_usage;
  }
  std::optional<OutputDir> out;
  try {
    out.emplace(dir);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return exit_usage;
  }
  RunManifest man;
  man.command = command;
  man.config_path = cfg.source.string();
  man.config_echo = cfg.echo;
  Context ctx{cfg, *out, man, threads, log};
  int code = exit_ok;
  try {
    if (command == "generate") code = cmd_generate(ctx);
    else if (command == "evolve") code = cmd_evolve(ctx);
    else if (command == "perturb") code = cmd_perturb(ctx);
    else if (command == "collide") code = cmd_collide(ctx);
    else if (command == "study") code = cmd_study(ctx);
    else code = cmd_dispersion(ctx);
  } catch (const Inadmissible& e) {
    man.message = "inadmissible: gamma = " + io::fmt(e.gamma()) + " is not below gamma_max(c_s) = " +
                  io::fmt(e.gamma_max());
    code = exit_inadmissible;
  } catch (const GridMismatch& e) {
    man.message = std::string("grid mismatch: ") + e.what();
    code = exit_inadmissible;
  } catch (const std::exception& e) {
    man.message = std::string("error: ") + e.what();
    code = exit_usage;
  }
  if (code == exit_nonconvergence && man.message.empty()) man.message = "profile iteration did not converge";
  if (code == exit_divergence && man.message.empty()) man.message = "stage divergence; outputs are partial";
  man.exit_code = code;
  man.partial = code != exit_ok && !out->files().empty();
  man.time("output", ctx.clock.lap());
  if (!man.message.empty()) log << man.message << '\n';
  for (const auto& w : man.warnings) log << "warning: " << w << '\n';
  man.finalize(*out);
  return code;
}

}  // namespace benjamin::cli
