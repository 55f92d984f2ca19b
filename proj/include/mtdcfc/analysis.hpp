#pragma once

// Stability and optimality analysis of assembled closed-loop models:
// assumption checks on the communication Laplacians, Hurwitz test,
// Lyapunov matrices and their Schur-complement tests, equilibrium solves
// with KKT residuals, and the gain-scaling sweep.

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtdcfc/assembly.hpp"
#include "mtdcfc/errors.hpp"

namespace mtdcfc {

inline constexpr double kAssumption1Tolerance = 1e-9;
/// Real parts at or above -kHurwitzMargin count as not strictly stable.
inline constexpr double kHurwitzMargin = 1e-9;

struct Assumption1Result {
  bool holds = false;
  std::optional<double> k_phi;  // set only when the assumption holds
  double residual = 0.0;        // max |L_phi - k L_R| at the best-fit k
};

/// Tests L_phi = k_phi L_R with k_phi the Frobenius least-squares fit.
inline Assumption1Result check_assumption1(const Matrix& l_phi, const Matrix& l_r) {
  if (l_phi.rows() != l_r.rows() || l_phi.cols() != l_r.cols()) {
    throw std::invalid_argument("check_assumption1: dimension mismatch");
  }
  const double denom = l_r.squaredNorm();
  if (denom == 0.0) throw std::invalid_argument("check_assumption1: L_R is the zero matrix");
  const double k = (l_phi.array() * l_r.array()).sum() / denom;
  Assumption1Result r;
  r.residual = (l_phi - k * l_r).cwiseAbs().maxCoeff();
  r.holds = r.residual < kAssumption1Tolerance;
  if (r.holds) r.k_phi = k;
  return r;
}

struct Assumption2Result {
  bool holds = false;
  double bound = 0.0;  // k_phi / (4 V^nom)
  double gamma = 0.0;
};

inline Assumption2Result check_assumption2(double gamma, double k_phi, double v_nom) {
  if (k_phi < 0.0) throw std::invalid_argument("check_assumption2: k_phi must be >= 0");
  if (v_nom <= 0.0) throw std::invalid_argument("check_assumption2: v_nom must be positive");
  const double bound = k_phi / (4.0 * v_nom);
  return {gamma > bound, bound, gamma};
}

struct HurwitzResult {
  double spectral_abscissa = -std::numeric_limits<double>::infinity();
  bool is_hurwitz = true;
};

inline HurwitzResult hurwitz(const Matrix& a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("hurwitz: matrix not square");
  if (a.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("hurwitz: eigenvalue computation failed");
  const double abscissa = es.eigenvalues().real().maxCoeff();
  return {abscissa, abscissa < -kHurwitzMargin};
}

inline HurwitzResult hurwitz(const ClosedLoopModel& model) { return hurwitz(model.a); }

/// Smallest eigenvalue of a symmetric matrix; nullopt for an empty one.
inline std::optional<double> min_eigenvalue(const Matrix& q) {
  if (q.rows() == 0) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Matrix> es(q, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("min_eigenvalue: solver failed");
  return es.eigenvalues()(0);
}

namespace detail {
inline bool positive_definite(const Matrix& q) {
  const auto e = min_eigenvalue(q);
  if (!e) return true;
  const double scale = std::max(1.0, q.cwiseAbs().maxCoeff());
  return *e > 1e-10 * scale;
}

/// PD test of [[A, B], [B', D]] through D > 0 and A - B D^-1 B' > 0, or
/// through A > 0 and D - B' A^-1 B > 0 when `pivot_first` is set.
inline bool schur_positive_definite(const Matrix& q, Eigen::Index split, bool pivot_first) {
  const auto n2 = q.rows() - split;
  const Matrix a = q.topLeftCorner(split, split);
  const Matrix b = q.topRightCorner(split, n2);
  const Matrix d = q.bottomRightCorner(n2, n2);
  if (pivot_first) {
    if (!positive_definite(a)) return false;
    return positive_definite(d - b.transpose() * a.fullPivLu().solve(b));
  }
  if (!positive_definite(d)) return false;
  return positive_definite(a - b * d.fullPivLu().solve(b.transpose()));
}
}  // namespace detail

struct LyapunovInputs {
  Vector k_omega;      // per converter
  Vector k_v;          // per converter
  Vector k_droop;      // droop at each converter bus
  double k_phi = 0.0;
  double gamma = 0.0;
  double v_nom = 1.0;
  Matrix l_r;
};

struct LyapunovCertificate {
  Matrix q1;
  Matrix q2;
  std::optional<double> q1_min_eig;
  std::optional<double> q2_min_eig;
  bool q1_pd = false;      // by eigenvalues
  bool q2_pd = false;
  bool q1_schur_pd = false;  // by the Schur complement route
  bool q2_schur_pd = false;
  bool schur_ok = false;   // both Schur tests pass
};

/// Q1 over (converter-bus frequency, V) and Q2 over (S'V, phi'') from the
/// dissipation inequality of the quadratic Lyapunov function.
inline LyapunovCertificate lyapunov_certificate(const LyapunovInputs& in) {
  const auto n = in.k_omega.size();
  if (in.k_v.size() != n || in.k_droop.size() != n || in.l_r.rows() != n || in.l_r.cols() != n) {
    throw std::invalid_argument("lyapunov_certificate: dimension mismatch");
  }
  const Matrix kw = in.k_omega.asDiagonal();
  const Matrix kv = in.k_v.asDiagonal();
  const Matrix kv_inv = in.k_v.cwiseInverse().asDiagonal();
  const Matrix kd = in.k_droop.asDiagonal();

  LyapunovCertificate c;
  c.q1.resize(2 * n, 2 * n);
  c.q1 << kw * kv_inv * (kw + 0.5 * kd), -kw, -kw, kv;

  const Matrix s = ones_complement(static_cast<std::size_t>(n));
  const Matrix x = s.transpose() * in.l_r * s;
  const auto m = x.rows();
  c.q2.resize(2 * m, 2 * m);
  c.q2 << in.v_nom * x, -0.5 * in.k_phi * x, -0.5 * in.k_phi * x, in.gamma * in.k_phi * x;

  c.q1_min_eig = min_eigenvalue(c.q1);
  c.q2_min_eig = min_eigenvalue(c.q2);
  c.q1_pd = detail::positive_definite(c.q1);
  c.q2_pd = detail::positive_definite(c.q2);
  c.q1_schur_pd = detail::schur_positive_definite(c.q1, n, /*pivot_first=*/false);
  c.q2_schur_pd = detail::schur_positive_definite(c.q2, m, /*pivot_first=*/true);
  c.schur_ok = c.q1_schur_pd && c.q2_schur_pd;
  return c;
}

inline LyapunovInputs lyapunov_inputs(const Grid& g, double k_phi) {
  const auto n = static_cast<Eigen::Index>(g.converters());
  LyapunovInputs in;
  in.k_omega = g.controller.k_omega;
  in.k_v = g.controller.k_v;
  in.k_droop.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) in.k_droop(i) = g.controller.k_droop[static_cast<std::size_t>(i)](0);
  in.k_phi = k_phi;
  in.gamma = g.controller.gamma;
  in.v_nom = g.net.v_nom;
  in.l_r = laplacian(g.net.conductance_graph());
  return in;
}

/// Certificate for a grid; throws when L_phi is not a multiple of L_R.
inline LyapunovCertificate lyapunov_certificate(const Grid& g) {
  if (!g.controller.comm_phi) throw std::invalid_argument("lyapunov_certificate: comm_phi missing");
  const auto a1 = check_assumption1(laplacian(*g.controller.comm_phi), laplacian(g.net.conductance_graph()));
  if (!a1.holds) throw std::invalid_argument("lyapunov_certificate: L_phi is not proportional to L_R");
  return lyapunov_certificate(lyapunov_inputs(g, *a1.k_phi));
}

/// How line states enter the Lyapunov function of a pi-link model.
enum class LyapunovForm {
  Energy,             // (V^nom/2)(I' L I + V' C^line V): stored magnetic/electric energy
  InverseInductance,  // (V^nom/2)(I' L^-1 I + V' C^line V)
};

/// Symmetric P with W(x) = x' P x in the model's coordinates.
inline Matrix lyapunov_matrix(const ClosedLoopModel& model, LyapunovForm form = LyapunovForm::Energy) {
  const auto& g = *model.grid;
  const auto& cfg = g.controller;
  const auto& L = model.full_layout;
  const auto N = L.dim();
  Matrix p = Matrix::Zero(N, N);
  for (std::size_t ai = 0; ai < g.areas.size(); ++ai) {
    const auto i = static_cast<Eigen::Index>(ai);
    const double c = cfg.k_omega(i) / (2.0 * cfg.k_v(i));
    const auto& d = L.at(delta_block(ai));
    const auto& w = L.at(omega_block(ai));
    p.block(d.offset, d.offset, d.size, d.size) = c * laplacian(g.areas[ai].ac_lines);
    p.block(w.offset, w.offset, w.size, w.size) = c * Matrix(g.areas[ai].inertia.asDiagonal());
  }
  const auto& v = L.at("v");
  p.block(v.offset, v.offset, v.size, v.size) = 0.5 * g.net.v_nom * Matrix(g.net.cap.asDiagonal());
  if (L.contains("eta")) {
    const auto& e = L.at("eta");
    p.block(e.offset, e.offset, e.size, e.size) = 0.5 * Matrix::Identity(e.size, e.size);
  }
  if (L.contains("phi")) {
    const auto& f = L.at("phi");
    p.block(f.offset, f.offset, f.size, f.size) = 0.5 * laplacian(*cfg.comm_phi);
  }
  if (model.plant == PlantModel::PiLink) {
    const auto pi = pi_link_matrices(g.net);
    for (std::size_t kk = 0; kk < g.net.lines.size(); ++kk) {
      const auto k = static_cast<Eigen::Index>(kk);
      const double l = pi.l(k, k);
      const double li = form == LyapunovForm::Energy ? l : 1.0 / l;
      const auto& ib = L.at(line_current_block(kk));
      const auto& vb = L.at(line_voltage_block(kk));
      p.block(ib.offset, ib.offset, ib.size, ib.size) =
          0.5 * g.net.v_nom * li * Matrix::Identity(ib.size, ib.size);
      p.block(vb.offset, vb.offset, vb.size, vb.size) =
          0.5 * g.net.v_nom * pi.c_line(k, k) * Matrix::Identity(vb.size, vb.size);
    }
  }
  return model.to_full.transpose() * p * model.to_full;
}

inline double lyapunov_value(const ClosedLoopModel& model, const Vector& x, LyapunovForm form = LyapunovForm::Energy) {
  if (x.size() != model.dim()) throw std::invalid_argument("lyapunov_value: state does not match layout");
  return x.dot(lyapunov_matrix(model, form) * x);
}

/// Largest eigenvalue of P A + A' P, scaled by max|P A|. Non-positive (up to
/// rounding) means W never increases along any trajectory.
inline double lyapunov_derivative_bound(const ClosedLoopModel& model, LyapunovForm form = LyapunovForm::Energy) {
  const Matrix p = lyapunov_matrix(model, form);
  const Matrix pa = p * model.a;
  const Matrix q = pa + pa.transpose();
  const auto e = min_eigenvalue(-q);
  if (!e) return 0.0;
  const double scale = std::max(1.0, pa.cwiseAbs().maxCoeff());
  return -*e / scale;
}

enum class Certificate { LyapunovProven, HurwitzOnly, Marginal, Unstable };

constexpr std::string_view to_string(Certificate c) noexcept {
  switch (c) {
    case Certificate::LyapunovProven: return "LYAPUNOV_PROVEN";
    case Certificate::HurwitzOnly: return "HURWITZ_ONLY";
    case Certificate::Marginal: return "MARGINAL";
    case Certificate::Unstable: return "UNSTABLE";
  }
  return "?";
}

struct StabilityReport {
  Assumption1Result assumption1;
  Assumption2Result assumption2;
  double spectral_abscissa = 0.0;
  bool is_hurwitz = false;
  std::optional<double> q1_min_eig;
  std::optional<double> q2_min_eig;
  bool schur_ok = false;
  double lyapunov_derivative = 0.0;  // lyapunov_derivative_bound of the model
  Certificate certificate = Certificate::Unstable;
};

/// Relative tolerance on lyapunov_derivative_bound for a certificate.
inline constexpr double kLyapunovDerivativeTolerance = 1e-9;

inline StabilityReport stability_report(const ClosedLoopModel& model) {
  const auto& g = *model.grid;
  StabilityReport r;
  const Matrix l_r = laplacian(g.net.conductance_graph());
  if (g.controller.comm_phi && l_r.squaredNorm() > 0.0) {
    r.assumption1 = check_assumption1(laplacian(*g.controller.comm_phi), l_r);
  }
  const double k_phi = r.assumption1.k_phi.value_or(0.0);
  r.assumption2 = check_assumption2(g.controller.gamma, k_phi, g.net.v_nom);
  if (!r.assumption1.holds) r.assumption2.holds = false;

  const auto h = hurwitz(model);
  r.spectral_abscissa = h.spectral_abscissa;
  r.is_hurwitz = h.is_hurwitz;

  bool q_ok = false;
  if (r.assumption1.holds) {
    const auto c = lyapunov_certificate(lyapunov_inputs(g, k_phi));
    r.q1_min_eig = c.q1_min_eig;
    r.q2_min_eig = c.q2_min_eig;
    r.schur_ok = c.schur_ok;
    q_ok = c.q1_pd && c.q2_pd;
  }
  r.lyapunov_derivative = lyapunov_derivative_bound(model);

  if (r.assumption1.holds && r.assumption2.holds && q_ok && model.certified &&
      r.lyapunov_derivative <= kLyapunovDerivativeTolerance) {
    r.certificate = Certificate::LyapunovProven;
  } else if (r.is_hurwitz) {
    r.certificate = Certificate::HurwitzOnly;
  } else if (r.spectral_abscissa > kHurwitzMargin) {
    r.certificate = Certificate::Unstable;
  } else {
    r.certificate = Certificate::Marginal;
  }
  return r;
}

struct EquilibriumReport {
  Vector state;
  Vector omega_hat_star;  // all buses, global order
  Vector v_hat_star;
  Vector eta_star;        // empty for decentralized generation
  Vector phi_star;        // full coordinates; empty for decentralized converters
  Vector p_gen_star;      // all buses
  Vector area_generation; // per-area sum of p_gen_star
  Vector p_inj_star;
  double kkt_gen_residual = 0.0;
  double kkt_volt_residual = 0.0;
  double avg_freq_residual = 0.0;
  double power_balance_residual = 0.0;  // |sum_i I^inj_i|
  double generation_cost = 0.0;
  double voltage_cost = 0.0;
};

/// Per-bus generation cost weights; implied by the gains when `costs` is empty.
inline Vector bus_generation_costs(const Grid& g, const std::optional<CostWeights>& costs) {
  Vector f(static_cast<Eigen::Index>(g.bus_count()));
  Eigen::Index b = 0;
  for (std::size_t ai = 0; ai < g.areas.size(); ++ai) {
    const auto i = static_cast<Eigen::Index>(ai);
    const auto& kdi = g.controller.k_droop_i[ai];
    for (Eigen::Index k = 0; k < kdi.size(); ++k, ++b) {
      f(b) = costs ? costs->f_p(i) : g.controller.k_omega(i) / (g.controller.k_v(i) * kdi(k));
    }
  }
  return f;
}

inline double half_range(const Vector& v) {
  if (v.size() == 0) return 0.0;
  return 0.5 * (v.maxCoeff() - v.minCoeff());
}

/// Solves A x* = -B u on a reduced, Hurwitz model and evaluates the
/// optimality residuals at x*.
inline EquilibriumReport equilibrium(const ClosedLoopModel& model, const Vector& u,
                                     const std::optional<CostWeights>& costs = std::nullopt) {
  if (!model.reduced) throw NumericalError("equilibrium: full-coordinate model is singular; reduce it first");
  if (u.size() != model.b_dist.cols()) throw std::invalid_argument("equilibrium: disturbance size mismatch");
  const auto h = hurwitz(model);
  if (!h.is_hurwitz) {
    throw NumericalError("equilibrium: UNSTABLE, spectral abscissa " + std::to_string(h.spectral_abscissa));
  }
  const auto& g = *model.grid;
  const auto& cfg = g.controller;
  EquilibriumReport r;
  Eigen::FullPivLU<Matrix> lu(model.a);
  if (!lu.isInvertible()) throw NumericalError("equilibrium: singular state matrix");
  r.state = lu.solve(-(model.b_dist * u));

  const Vector xf = model.to_full * r.state;
  const auto& L = model.full_layout;
  const auto nb = static_cast<Eigen::Index>(g.bus_count());
  const auto n = static_cast<Eigen::Index>(g.converters());
  r.omega_hat_star.resize(nb);
  r.p_gen_star.resize(nb);
  r.area_generation.resize(n);
  const auto flows = evaluate_powers(model, r.state);
  Eigen::Index b = 0;
  for (std::size_t ai = 0; ai < g.areas.size(); ++ai) {
    const Vector w = L.segment(xf, omega_block(ai));
    r.omega_hat_star.segment(b, w.size()) = w;
    r.p_gen_star.segment(b, w.size()) = flows.p_gen[ai];
    r.area_generation(static_cast<Eigen::Index>(ai)) = flows.p_gen[ai].sum();
    r.avg_freq_residual += cfg.k_droop_i[ai].dot(w);
    b += w.size();
  }
  r.avg_freq_residual = std::abs(r.avg_freq_residual);
  r.v_hat_star = flows.v_hat;
  r.p_inj_star = flows.p_inj;
  if (L.contains("eta")) r.eta_star = L.segment(xf, "eta");
  if (L.contains("phi")) r.phi_star = L.segment(xf, "phi");

  const Vector f_p = bus_generation_costs(g, costs);
  const Vector f_v = costs ? costs->f_v : cfg.k_v;
  r.kkt_gen_residual = half_range(f_p.cwiseProduct(r.p_gen_star));
  r.kkt_volt_residual = std::abs(f_v.dot(r.v_hat_star));
  r.power_balance_residual = std::abs(r.p_inj_star.sum() / g.net.v_nom);
  r.generation_cost = 0.5 * f_p.dot(r.p_gen_star.cwiseAbs2());
  r.voltage_cost = 0.5 * f_v.dot(r.v_hat_star.cwiseAbs2());
  return r;
}

struct SweepRow {
  double scale = 1.0;
  bool is_hurwitz = false;
  double spectral_abscissa = 0.0;
  double max_abs_omega = 0.0;
  double kkt_gen_residual = 0.0;
  double kkt_volt_residual = 0.0;
  double avg_freq_residual = 0.0;
  std::string error;  // non-empty when the row could not be evaluated
};

/// Scales K^omega and K^droop,I jointly (F^P fixed) and reports how far the
/// equilibrium is from frequency restoration and optimal dispatch.
inline std::vector<SweepRow> corollary_limit_sweep(const Grid& base, PlantModel plant, const std::vector<double>& scales,
                                                   const std::vector<Disturbance>& disturbances) {
  if (!(base.controller.gamma > 0.0)) {
    throw std::invalid_argument("corollary_limit_sweep: gamma must be > 0 for the gain limit to apply");
  }
  std::vector<SweepRow> rows;
  rows.reserve(scales.size());
  for (double s : scales) {
    SweepRow row;
    row.scale = s;
    try {
      if (!(s > 0.0)) throw std::invalid_argument("scale must be positive");
      Grid g = base;
      g.controller.k_omega *= s;
      for (auto& kdi : g.controller.k_droop_i) kdi *= s;
      const auto model = assemble(g, plant, /*reduced=*/true);
      const auto h = hurwitz(model);
      row.is_hurwitz = h.is_hurwitz;
      row.spectral_abscissa = h.spectral_abscissa;
      if (!h.is_hurwitz) {
        row.error = "not Hurwitz";
      } else {
        const auto eq = equilibrium(model, disturbance_map(model, disturbances));
        row.max_abs_omega = eq.omega_hat_star.cwiseAbs().maxCoeff();
        row.kkt_gen_residual = eq.kkt_gen_residual;
        row.kkt_volt_residual = eq.kkt_volt_residual;
        row.avg_freq_residual = eq.avg_freq_residual;
      }
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace mtdcfc
