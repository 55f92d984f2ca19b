#pragma once

// Machine-readable output: JSON records for stability / equilibrium /
// sweep results and `t,<series>` time-series tables in CSV or JSON.

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtdcfc/analysis.hpp"
#include "mtdcfc/sim.hpp"

namespace mtdcfc {

namespace detail {
inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

inline nlohmann::json vec(const Vector& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}
}  // namespace detail

inline nlohmann::json to_json(const StabilityReport& r) {
  return {{"assumption1",
           {{"holds", r.assumption1.holds}, {"k_phi", detail::opt(r.assumption1.k_phi)}, {"residual", r.assumption1.residual}}},
          {"assumption2", {{"holds", r.assumption2.holds}, {"bound", r.assumption2.bound}, {"gamma", r.assumption2.gamma}}},
          {"spectral_abscissa", r.spectral_abscissa},
          {"is_hurwitz", r.is_hurwitz},
          {"q1_min_eig", detail::opt(r.q1_min_eig)},
          {"q2_min_eig", detail::opt(r.q2_min_eig)},
          {"schur_ok", r.schur_ok},
          {"lyapunov_derivative", r.lyapunov_derivative},
          {"certificate", to_string(r.certificate)}};
}

inline nlohmann::json to_json(const EquilibriumReport& r) {
  return {{"omega_hat_star", detail::vec(r.omega_hat_star)},
          {"v_hat_star", detail::vec(r.v_hat_star)},
          {"eta_star", detail::vec(r.eta_star)},
          {"phi_star", detail::vec(r.phi_star)},
          {"p_gen_star", detail::vec(r.p_gen_star)},
          {"area_generation", detail::vec(r.area_generation)},
          {"p_inj_star", detail::vec(r.p_inj_star)},
          {"kkt_gen_residual", r.kkt_gen_residual},
          {"kkt_volt_residual", r.kkt_volt_residual},
          {"avg_freq_residual", r.avg_freq_residual},
          {"power_balance_residual", r.power_balance_residual},
          {"generation_cost", r.generation_cost},
          {"voltage_cost", r.voltage_cost}};
}

/// Shortest decimal text that reads back to the same double (17 digits).
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// A `t,<columns>` table: one row per sample.
struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<double> times;
  Matrix values;  // samples x columns
};

inline std::string to_csv(const Series& s) {
  std::string out = "t";
  for (const auto& c : s.columns) out += "," + c;
  out += "\n";
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    out += format_double(s.times[k]);
    for (Eigen::Index c = 0; c < s.values.cols(); ++c) out += "," + format_double(s.values(static_cast<Eigen::Index>(k), c));
    out += "\n";
  }
  return out;
}

inline nlohmann::json to_json(const Series& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t k = 0; k < s.times.size(); ++k) {
    nlohmann::json row = nlohmann::json::array({s.times[k]});
    for (Eigen::Index c = 0; c < s.values.cols(); ++c) row.push_back(s.values(static_cast<Eigen::Index>(k), c));
    rows.push_back(std::move(row));
  }
  nlohmann::json cols = nlohmann::json::array({"t"});
  for (const auto& c : s.columns) cols.push_back(c);
  return {{"columns", cols}, {"rows", rows}};
}

/// The four figure-ready families of a trajectory, in absolute units where
/// the quantity has a reference (frequency, DC voltage).
inline std::vector<Series> trajectory_series(const ClosedLoopModel& model, const Trajectory& tr) {
  const auto& g = *model.grid;
  const auto n = static_cast<Eigen::Index>(g.converters());
  std::vector<std::string> area_cols, conv_cols;
  for (Eigen::Index i = 0; i < n; ++i) {
    area_cols.push_back("area" + std::to_string(i));
    conv_cols.push_back("conv" + std::to_string(i));
  }
  Matrix freq = tr.omega_mean.array() + g.controller.omega_ref;
  Matrix volt = tr.v_hat.rowwise() + g.net.v_ref.transpose();
  return {{"frequencies", area_cols, tr.times, freq},
          {"dc_voltages", conv_cols, tr.times, volt},
          {"generation", area_cols, tr.times, tr.area_generation},
          {"injections", conv_cols, tr.times, tr.p_inj}};
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

/// Parses a CSV written by to_csv back into a series (used for checks).
inline Series read_csv(const std::string& text, std::string name = {}) {
  Series s;
  s.name = std::move(name);
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t p = 0;
    while (true) {
      auto c = line.find(',', p);
      cells.push_back(line.substr(p, c == std::string::npos ? std::string::npos : c - p));
      if (c == std::string::npos) break;
      p = c + 1;
    }
    if (header) {
      if (cells.empty() || cells[0] != "t") throw std::invalid_argument("CSV header must start with t");
      s.columns.assign(cells.begin() + 1, cells.end());
      header = false;
      continue;
    }
    if (cells.size() != s.columns.size() + 1) throw std::invalid_argument("CSV row width mismatch");
    std::vector<double> r;
    for (const auto& c : cells) r.push_back(std::stod(c));
    rows.push_back(std::move(r));
  }
  s.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(s.columns.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    s.times.push_back(rows[k][0]);
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
      s.values(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = rows[k][c + 1];
    }
  }
  return s;
}

}  // namespace mtdcfc
