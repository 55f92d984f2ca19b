#pragma once

// The four user-facing commands. Each loads a configuration, runs one
// pipeline and writes its artifacts into an output directory; the returned
// RunReport lists every file written.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mtdcfc/analysis.hpp"
#include "mtdcfc/config.hpp"
#include "mtdcfc/report.hpp"
#include "mtdcfc/sim.hpp"

namespace mtdcfc {

enum class ArtifactKind { TimeseriesCsv, TimeseriesJson, ReportJson, SweepCsv };

constexpr std::string_view to_string(ArtifactKind k) noexcept {
  switch (k) {
    case ArtifactKind::TimeseriesCsv: return "TIMESERIES_CSV";
    case ArtifactKind::TimeseriesJson: return "TIMESERIES_JSON";
    case ArtifactKind::ReportJson: return "REPORT_JSON";
    case ArtifactKind::SweepCsv: return "SWEEP_CSV";
  }
  return "?";
}

struct Artifact {
  std::string path;
  ArtifactKind kind;
};

struct RunReport {
  nlohmann::json report;  // the REPORT_JSON document (stability, equilibrium, ...)
  std::vector<Artifact> artifacts;
};

enum class OutputFormat { Csv, Json };

struct CommandOptions {
  std::string config;
  std::string out = "out";
  OutputFormat format = OutputFormat::Csv;
  std::optional<Variant> variant;
  std::vector<double> scales{1.0, 10.0, 100.0};
};

namespace detail {

inline std::filesystem::path prepare_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw std::runtime_error("cannot create output directory " + dir.string());
  }
  return dir;
}

inline Config load_for(const CommandOptions& opts) {
  Config cfg = load_config(opts.config);
  if (opts.variant) {
    cfg.grid.controller.variant = *opts.variant;
    try {
      cfg.grid.validate();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("--variant", ex.what());
    }
  }
  return cfg;
}

inline std::vector<Disturbance> all_events(const Scenario& sc) {
  std::vector<Disturbance> out;
  for (const auto& d : sc.disturbances) out.push_back(d.event);
  return out;
}

/// Stability and, when the reduced model is Hurwitz, the equilibrium for
/// the sum of all configured disturbances.
inline nlohmann::json analysis_json(const Config& cfg) {
  const auto model = assemble(cfg.grid, cfg.plant, /*reduced=*/true, {.allow_multi_generator = true});
  const auto st = stability_report(model);
  nlohmann::json j{{"variant", to_string(cfg.grid.controller.variant)},
                   {"plant", to_string(cfg.plant)},
                   {"stability", to_json(st)},
                   {"warnings", model.warnings}};
  if (st.is_hurwitz) {
    const auto u = disturbance_map(model, all_events(cfg.scenario));
    j["equilibrium"] = to_json(equilibrium(model, u, cfg.costs));
  } else {
    j["equilibrium"] = nullptr;
    j["warnings"].push_back("reduced model is not Hurwitz: no equilibrium reported");
  }
  return j;
}

inline void finish(RunReport& run, const std::filesystem::path& dir, const std::string& file) {
  const auto path = (dir / file).string();
  run.artifacts.push_back({path, ArtifactKind::ReportJson});
  auto arts = nlohmann::json::array();
  for (const auto& a : run.artifacts) arts.push_back({{"path", a.path}, {"kind", to_string(a.kind)}});
  run.report["artifacts"] = arts;
  write_text(path, run.report.dump(2) + "\n");
}

inline void write_series(RunReport& run, const std::filesystem::path& dir, const std::vector<Series>& series,
                         OutputFormat format) {
  if (format == OutputFormat::Csv) {
    for (const auto& s : series) {
      const auto path = (dir / (s.name + ".csv")).string();
      write_text(path, to_csv(s));
      run.artifacts.push_back({path, ArtifactKind::TimeseriesCsv});
    }
  } else {
    nlohmann::json j;
    for (const auto& s : series) j[s.name] = to_json(s);
    const auto path = (dir / "timeseries.json").string();
    write_text(path, j.dump() + "\n");
    run.artifacts.push_back({path, ArtifactKind::TimeseriesJson});
  }
}

}  // namespace detail

inline RunReport cmd_analyze(const CommandOptions& opts) {
  const auto cfg = detail::load_for(opts);
  const auto dir = detail::prepare_dir(opts.out);
  RunReport run;
  run.report = detail::analysis_json(cfg);
  detail::finish(run, dir, "report.json");
  return run;
}

inline RunReport cmd_simulate(const CommandOptions& opts) {
  const auto cfg = detail::load_for(opts);
  const auto dir = detail::prepare_dir(opts.out);
  RunReport run;
  run.report = detail::analysis_json(cfg);
  const auto model = assemble(cfg.grid, cfg.plant, /*reduced=*/false, {.allow_multi_generator = true});
  const auto tr = integrate(model, cfg.scenario);
  for (const auto& w : tr.warnings) run.report["warnings"].push_back(w);
  detail::write_series(run, dir, trajectory_series(model, tr), opts.format);
  detail::finish(run, dir, "report.json");
  return run;
}

/// Summary metrics of one variant in a comparison run.
struct VariantSummary {
  Variant variant;
  double static_freq_error = 0.0;       // max |omega_hat*| over buses, equilibrium
  double terminal_freq_error = 0.0;     // max |mean omega_hat| over areas at t_end
  double weighted_voltage_error = 0.0;  // 1' K^V V_hat at t_end
  double generation_spread = 0.0;       // max - min of per-area generation, equilibrium
  double terminal_generation_spread = 0.0;
  double settling_time = 0.0;           // converter injections, 2% band
};

/// Last time any column leaves the band of +-2% of its total excursion
/// around its final value. Zero when nothing moves.
inline double settling_time(const std::vector<double>& times, const Matrix& values, double band = 0.02) {
  double t_settle = 0.0;
  const auto last = values.rows() - 1;
  if (last < 0) return 0.0;
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    const double final_value = values(last, c);
    const double excursion = (values.col(c).array() - final_value).abs().maxCoeff();
    if (!(excursion > 0.0)) continue;
    const double tol = band * excursion;
    for (Eigen::Index k = last; k >= 0; --k) {
      if (std::abs(values(k, c) - final_value) > tol) {
        // k < last: the final sample is always inside its own band
        t_settle = std::max(t_settle, times[static_cast<std::size_t>(k + 1)]);
        break;
      }
    }
  }
  return t_settle;
}

inline nlohmann::json to_json(const VariantSummary& s) {
  return {{"variant", to_string(s.variant)},
          {"static_freq_error", s.static_freq_error},
          {"terminal_freq_error", s.terminal_freq_error},
          {"weighted_voltage_error", s.weighted_voltage_error},
          {"generation_spread", s.generation_spread},
          {"terminal_generation_spread", s.terminal_generation_spread},
          {"settling_time", s.settling_time}};
}

inline std::vector<VariantSummary> compare_summaries(const Config& cfg,
                                                     std::vector<std::pair<Variant, Trajectory>>* trajectories = nullptr) {
  std::vector<VariantSummary> out;
  const auto events = detail::all_events(cfg.scenario);
  for (auto v : kComparedVariants) {
    Grid g = cfg.grid;
    g.controller.variant = v;
    VariantSummary s{v};
    const auto reduced = assemble(g, cfg.plant, true, {.allow_multi_generator = true});
    const auto eq = equilibrium(reduced, disturbance_map(reduced, events), cfg.costs);
    s.static_freq_error = eq.omega_hat_star.size() ? eq.omega_hat_star.cwiseAbs().maxCoeff() : 0.0;
    s.generation_spread = eq.area_generation.maxCoeff() - eq.area_generation.minCoeff();
    const auto full = assemble(g, cfg.plant, false, {.allow_multi_generator = true});
    auto tr = integrate(full, cfg.scenario);
    const auto last = tr.omega_mean.rows() - 1;
    s.terminal_freq_error = tr.omega_mean.row(last).cwiseAbs().maxCoeff();
    s.weighted_voltage_error = g.controller.k_v.dot(tr.v_hat.row(last).transpose());
    s.terminal_generation_spread = tr.area_generation.row(last).maxCoeff() - tr.area_generation.row(last).minCoeff();
    s.settling_time = settling_time(tr.times, tr.p_inj);
    out.push_back(s);
    if (trajectories) trajectories->emplace_back(v, std::move(tr));
  }
  return out;
}

inline RunReport cmd_compare(const CommandOptions& opts) {
  const auto cfg = detail::load_for(opts);
  const auto dir = detail::prepare_dir(opts.out);
  RunReport run;
  std::vector<std::pair<Variant, Trajectory>> trs;
  const auto summaries = compare_summaries(cfg, &trs);
  const auto model = assemble(cfg.grid, cfg.plant, false, {.allow_multi_generator = true});
  for (const auto& [v, tr] : trs) {
    const auto sub = detail::prepare_dir(dir / std::string(to_string(v)));
    detail::write_series(run, sub, trajectory_series(model, tr), opts.format);
  }
  std::string csv =
      "variant,static_freq_error,terminal_freq_error,weighted_voltage_error,generation_spread,"
      "terminal_generation_spread,settling_time\n";
  nlohmann::json table = nlohmann::json::array();
  for (const auto& s : summaries) {
    csv += std::string(to_string(s.variant)) + "," + format_double(s.static_freq_error) + "," +
           format_double(s.terminal_freq_error) + "," + format_double(s.weighted_voltage_error) + "," +
           format_double(s.generation_spread) + "," + format_double(s.terminal_generation_spread) + "," +
           format_double(s.settling_time) + "\n";
    table.push_back(to_json(s));
  }
  const auto summary_path = (dir / "summary.csv").string();
  write_text(summary_path, csv);
  run.artifacts.push_back({summary_path, ArtifactKind::TimeseriesCsv});
  run.report = {{"plant", to_string(cfg.plant)}, {"summary", table}};
  detail::finish(run, dir, "report.json");
  return run;
}

inline RunReport cmd_sweep(const CommandOptions& opts) {
  const auto cfg = detail::load_for(opts);
  if (!(cfg.grid.controller.gamma > 0.0)) {
    throw ConfigError("controller.gamma",
                      "the gain sweep needs gamma > 0: with gamma = 0 phi integrates and the scaled limit does not apply");
  }
  if (opts.scales.empty()) throw ConfigError("--scales", "at least one scale is required");
  const auto dir = detail::prepare_dir(opts.out);
  const auto rows = corollary_limit_sweep(cfg.grid, cfg.plant, opts.scales, detail::all_events(cfg.scenario));
  std::string csv = "scale,is_hurwitz,spectral_abscissa,max_abs_omega,kkt_gen_residual,kkt_volt_residual,avg_freq_residual,error\n";
  nlohmann::json table = nlohmann::json::array();
  for (const auto& r : rows) {
    csv += format_double(r.scale) + "," + (r.is_hurwitz ? "1" : "0") + "," + format_double(r.spectral_abscissa) + "," +
           format_double(r.max_abs_omega) + "," + format_double(r.kkt_gen_residual) + "," +
           format_double(r.kkt_volt_residual) + "," + format_double(r.avg_freq_residual) + "," + r.error + "\n";
    table.push_back({{"scale", r.scale},
                     {"is_hurwitz", r.is_hurwitz},
                     {"spectral_abscissa", r.spectral_abscissa},
                     {"max_abs_omega", r.max_abs_omega},
                     {"kkt_gen_residual", r.kkt_gen_residual},
                     {"kkt_volt_residual", r.kkt_volt_residual},
                     {"avg_freq_residual", r.avg_freq_residual},
                     {"error", r.error}});
  }
  RunReport run;
  const auto path = (dir / "sweep.csv").string();
  write_text(path, csv);
  run.artifacts.push_back({path, ArtifactKind::SweepCsv});
  run.report = {{"plant", to_string(cfg.plant)}, {"sweep", table}};
  detail::finish(run, dir, "report.json");
  return run;
}

/// Process exit codes of the command line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

}  // namespace mtdcfc
