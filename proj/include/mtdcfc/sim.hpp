#pragma once

// Fixed-step time-domain simulation of closed-loop models under step
// disturbances. Linear runs default to the exact zero-order-hold map
// x+ = Phi x + Gamma B u; RK4 is available with automatic substepping.
// The nonlinear power/current relation I = P / V is integrated with a
// second-order exponential Runge-Kutta scheme (ETD2RK) around the same A.

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mtdcfc/analysis.hpp"
#include "mtdcfc/assembly.hpp"
#include "mtdcfc/errors.hpp"

namespace mtdcfc {

enum class SimMode { Linear, Nonlinear };
enum class Integrator { ExactZoh, Rk4 };

struct TimedDisturbance {
  double time = 0.0;
  Disturbance event;

  friend bool operator==(const TimedDisturbance&, const TimedDisturbance&) = default;
};

inline constexpr double kMaxStep = 0.01;

struct Scenario {
  double t_end = 45.0;
  double dt = 1e-3;
  std::vector<TimedDisturbance> disturbances;
  SimMode mode = SimMode::Linear;
  std::size_t record_every = 1;
  Integrator integrator = Integrator::ExactZoh;
  Vector x0;  // empty means the zero state

  std::size_t steps() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }

  void validate() const {
    if (!(dt > 0.0) || dt > kMaxStep) throw std::invalid_argument("scenario: dt must be in (0, 0.01]");
    if (!(t_end > 0.0) || !std::isfinite(t_end)) throw std::invalid_argument("scenario: t_end must be positive");
    if (std::abs(static_cast<double>(steps()) * dt - t_end) > 1e-9 * std::max(1.0, t_end)) {
      throw std::invalid_argument("scenario: t_end must be a whole number of steps");
    }
    if (record_every < 1) throw std::invalid_argument("scenario: record_every must be >= 1");
    for (const auto& d : disturbances) {
      if (!(d.time >= 0.0) || d.time > t_end) throw std::invalid_argument("scenario: event time outside [0, t_end]");
      if (!std::isfinite(d.event.magnitude)) throw std::invalid_argument("scenario: non-finite event magnitude");
    }
  }

  friend bool operator==(const Scenario& a, const Scenario& b) {
    return a.t_end == b.t_end && a.dt == b.dt && a.disturbances == b.disturbances && a.mode == b.mode &&
           a.record_every == b.record_every && a.integrator == b.integrator && a.x0 == b.x0;
  }
};

/// Step index at which an event becomes active: the first sample time >= t.
inline std::size_t event_step(double t, double dt) {
  return static_cast<std::size_t>(std::max(0.0, std::ceil(t / dt - 1e-9)));
}

struct Trajectory {
  std::vector<double> times;
  std::vector<Vector> states;
  // Derived per sample (rows); empty when the model carries no grid.
  Matrix p_gen;            // per bus, global order
  Matrix p_inj;            // per converter, including the display offset
  Matrix v_hat;            // per converter
  Matrix omega_mean;       // per area, arithmetic mean over its buses
  Matrix area_generation;  // per area, sum of p_gen
  std::vector<std::string> warnings;
};

/// Exact discretization of x' = A x + w with w held constant over dt.
struct ZohMaps {
  Matrix phi;    // e^{A dt}
  Matrix gamma;  // integral_0^dt e^{A s} ds
};

inline ZohMaps zoh_maps(const Matrix& a, double dt) {
  const auto n = a.rows();
  Matrix aug = Matrix::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = a * dt;
  aug.topRightCorner(n, n) = Matrix::Identity(n, n) * dt;
  const Matrix e = aug.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

/// e^{hA}, h phi1(hA) and h^2 phi2(hA) from one augmented exponential.
struct EtdMaps {
  Matrix phi;
  Matrix m1;
  Matrix m2;
};

inline EtdMaps etd_maps(const Matrix& a, double h) {
  const auto n = a.rows();
  Matrix aug = Matrix::Zero(3 * n, 3 * n);
  aug.topLeftCorner(n, n) = a * h;
  aug.block(0, n, n, n) = Matrix::Identity(n, n) * h;
  aug.block(n, 2 * n, n, n) = Matrix::Identity(n, n) * h;
  const Matrix e = aug.exp();
  return {e.topLeftCorner(n, n), e.block(0, n, n, n), e.block(0, 2 * n, n, n)};
}

inline double spectral_radius(const Matrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  if (es.info() != Eigen::Success) throw NumericalError("spectral_radius: eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

namespace detail {

/// Per-step P^m vectors: piecewise constant, changing only at event steps.
class InputSchedule {
 public:
  InputSchedule(const ClosedLoopModel& model, const Scenario& sc) {
    const auto inputs = model.b_dist.cols();
    std::map<std::size_t, Vector> deltas;
    for (const auto& d : sc.disturbances) {
      Vector u = Vector::Zero(inputs);
      if (model.grid) {
        u = disturbance_map(model, {d.event});
      } else {
        if (d.event.bus >= static_cast<std::size_t>(inputs)) throw std::out_of_range("disturbance: unknown input");
        u(static_cast<Eigen::Index>(d.event.bus)) = d.event.magnitude;
      }
      auto k = event_step(d.time, sc.dt);
      auto [it, fresh] = deltas.try_emplace(k, Vector::Zero(inputs));
      it->second += u;
    }
    Vector acc = Vector::Zero(inputs);
    segments_.push_back({0, acc});
    for (auto& [k, du] : deltas) {
      acc += du;
      if (k == 0) {
        segments_.back().u = acc;
      } else {
        segments_.push_back({k, acc});
      }
    }
  }

  /// Index of the segment active during step k (from t_k to t_k+1).
  std::size_t segment_at(std::size_t k) const {
    std::size_t s = 0;
    while (s + 1 < segments_.size() && segments_[s + 1].start <= k) ++s;
    return s;
  }

  const Vector& u(std::size_t segment) const { return segments_[segment].u; }
  std::size_t size() const { return segments_.size(); }

 private:
  struct Segment {
    std::size_t start;
    Vector u;
  };
  std::vector<Segment> segments_;
};

inline void fill_derived(const ClosedLoopModel& model, Trajectory& tr) {
  if (!model.grid) return;
  const auto& g = *model.grid;
  const auto samples = static_cast<Eigen::Index>(tr.states.size());
  const auto nb = static_cast<Eigen::Index>(g.bus_count());
  const auto n = static_cast<Eigen::Index>(g.converters());
  tr.p_gen.resize(samples, nb);
  tr.p_inj.resize(samples, n);
  tr.v_hat.resize(samples, n);
  tr.omega_mean.resize(samples, n);
  tr.area_generation.resize(samples, n);
  const Vector offset = g.controller.p_inj_nom.size() == n ? g.controller.p_inj_nom : Vector::Zero(n);
  for (Eigen::Index s = 0; s < samples; ++s) {
    const auto f = evaluate_powers(model, tr.states[static_cast<std::size_t>(s)]);
    const Vector xf = model.to_full * tr.states[static_cast<std::size_t>(s)];
    Eigen::Index b = 0;
    for (std::size_t a = 0; a < g.areas.size(); ++a) {
      const auto i = static_cast<Eigen::Index>(a);
      const auto sz = f.p_gen[a].size();
      tr.p_gen.block(s, b, 1, sz) = f.p_gen[a].transpose();
      tr.area_generation(s, i) = f.p_gen[a].sum();
      tr.omega_mean(s, i) = model.full_layout.segment(xf, omega_block(a)).mean();
      b += sz;
    }
    tr.p_inj.row(s) = (f.p_inj + offset).transpose();
    tr.v_hat.row(s) = f.v_hat.transpose();
  }
}

/// Nonlinear correction to the DC voltage rows: E P^inj (1/V - 1/V^nom).
class NonlinearTerm {
 public:
  explicit NonlinearTerm(const ClosedLoopModel& model) : model_(model) {
    if (model.reduced) throw std::invalid_argument("nonlinear simulation needs a full-coordinate model");
    if (!model.grid) throw std::invalid_argument("nonlinear simulation needs a grid");
    const auto& v = model.layout.at("v");
    v0_ = v.offset;
    n_ = v.size;
  }

  Vector operator()(const Vector& x, double t) const {
    const auto& g = *model_.grid;
    const auto f = evaluate_powers(model_, x);
    const Vector v_abs = f.v_hat + g.net.v_ref;
    if ((v_abs.array() < kMinNonlinearVoltage).any() || !v_abs.allFinite()) {
      throw IntegrationAbort(t, "DC voltage below 0.5 p.u. in nonlinear mode");
    }
    Vector out = Vector::Zero(x.size());
    const Vector i_nl = power_to_current(f.p_inj, v_abs, g.net.v_nom, PowerCurrentMode::Nonlinear);
    const Vector i_lin = power_to_current(f.p_inj, v_abs, g.net.v_nom, PowerCurrentMode::Linear);
    out.segment(v0_, n_) = (i_nl - i_lin).cwiseQuotient(g.net.cap);
    return out;
  }

 private:
  const ClosedLoopModel& model_;
  Eigen::Index v0_ = 0;
  Eigen::Index n_ = 0;
};

inline void check_finite(const Vector& x, double t) {
  if (!x.allFinite()) throw IntegrationAbort(t, "non-finite state");
}

}  // namespace detail

/// Integrates the model over the scenario. Samples are taken at t_k = k dt
/// for k divisible by record_every, plus the final step.
inline Trajectory integrate(const ClosedLoopModel& model, const Scenario& sc) {
  sc.validate();
  const auto N = model.dim();
  if (sc.x0.size() != 0 && sc.x0.size() != N) throw std::invalid_argument("integrate: x0 does not match the model");
  const detail::InputSchedule schedule(model, sc);
  const auto steps = sc.steps();
  const double dt = sc.dt;

  Trajectory tr;
  Vector x = sc.x0.size() == 0 ? Vector::Zero(N) : sc.x0;
  auto record = [&](std::size_t k) {
    tr.times.push_back(static_cast<double>(k) * dt);
    tr.states.push_back(x);
  };
  record(0);

  // Per-segment forcing B u, precomputed.
  std::vector<Vector> forcing;
  for (std::size_t s = 0; s < schedule.size(); ++s) forcing.push_back(model.b_dist * schedule.u(s));

  if (sc.mode == SimMode::Nonlinear) {
    const detail::NonlinearTerm nl(model);
    const auto maps = etd_maps(model.a, dt);
    const Matrix m2_over_h = maps.m2 / dt;
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * dt;
      const Vector& bu = forcing[schedule.segment_at(k)];
      const Vector fx = bu + nl(x, t);
      const Vector a = maps.phi * x + maps.m1 * fx;
      detail::check_finite(a, t);
      const Vector fa = bu + nl(a, t + dt);
      x = a + m2_over_h * (fa - fx);
      detail::check_finite(x, t + dt);
      if ((k + 1) % sc.record_every == 0 || k + 1 == steps) record(k + 1);
    }
  } else if (sc.integrator == Integrator::ExactZoh) {
    const auto maps = zoh_maps(model.a, dt);
    std::vector<Vector> drive;
    for (const auto& f : forcing) drive.push_back(maps.gamma * f);
    for (std::size_t k = 0; k < steps; ++k) {
      x = maps.phi * x + drive[schedule.segment_at(k)];
      detail::check_finite(x, static_cast<double>(k + 1) * dt);
      if ((k + 1) % sc.record_every == 0 || k + 1 == steps) record(k + 1);
    }
  } else {
    const double rho = spectral_radius(model.a);
    const auto sub = static_cast<std::size_t>(std::max(1.0, std::ceil(dt * rho / 2.5)));
    if (sub > 1) {
      tr.warnings.push_back("RK4: dt * |lambda|max = " + std::to_string(dt * rho) + " >= 2.5, using " +
                            std::to_string(sub) + " substeps");
    }
    const double h = dt / static_cast<double>(sub);
    for (std::size_t k = 0; k < steps; ++k) {
      const Vector& bu = forcing[schedule.segment_at(k)];
      for (std::size_t j = 0; j < sub; ++j) {
        const Vector k1 = model.a * x + bu;
        const Vector k2 = model.a * (x + 0.5 * h * k1) + bu;
        const Vector k3 = model.a * (x + 0.5 * h * k2) + bu;
        const Vector k4 = model.a * (x + h * k3) + bu;
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      detail::check_finite(x, static_cast<double>(k + 1) * dt);
      if ((k + 1) % sc.record_every == 0 || k + 1 == steps) record(k + 1);
    }
  }
  detail::fill_derived(model, tr);
  return tr;
}

/// Trajectories of the three compared controller combinations on one plant.
inline std::vector<std::pair<Variant, Trajectory>> compare_variants(const Grid& base, PlantModel plant,
                                                                    const Scenario& sc, bool reduced = false) {
  std::vector<std::pair<Variant, Trajectory>> out;
  for (auto v : kComparedVariants) {
    Grid g = base;
    g.controller.variant = v;
    out.emplace_back(v, integrate(assemble(g, plant, reduced), sc));
  }
  return out;
}

struct LyapunovTrace {
  std::vector<double> times;
  std::vector<double> w;   // W(x_k - x*_k), x* of the input active on step k
  std::vector<double> dw;  // W(x_k+1 - x*_k) - W(x_k - x*_k), one per step
  double max_increase = 0.0;
};

/// W along a simulated trajectory, measured from the equilibrium of the
/// input active over each step, so an event never enters a difference.
inline LyapunovTrace lyapunov_trace(const ClosedLoopModel& model, const Scenario& sc,
                                    LyapunovForm form = LyapunovForm::Energy) {
  if (!model.grid) throw std::invalid_argument("lyapunov_trace: model has no grid");
  Scenario every = sc;
  every.record_every = 1;
  const auto tr = integrate(model, every);
  const detail::InputSchedule schedule(model, every);
  const auto reduced = model.reduced ? model : reduce(model);
  std::vector<Vector> x_star;
  for (std::size_t s = 0; s < schedule.size(); ++s) {
    const Vector& u = schedule.u(s);
    if (u.isZero(0.0)) {
      x_star.push_back(Vector::Zero(model.dim()));
      continue;
    }
    const Vector xr = equilibrium(reduced, u).state;
    // Back to this model's coordinates; T has orthonormal columns.
    x_star.push_back(model.reduced ? xr : Vector(reduced.to_full * xr));
  }
  const Matrix p = lyapunov_matrix(model, form);
  auto w_of = [&](const Vector& e) { return e.dot(p * e); };
  LyapunovTrace out;
  out.times = tr.times;
  out.max_increase = -std::numeric_limits<double>::infinity();
  const auto steps = tr.states.size();
  for (std::size_t k = 0; k < steps; ++k) {
    const auto s = schedule.segment_at(k);
    out.w.push_back(w_of(tr.states[k] - x_star[s]));
    if (k + 1 < steps) {
      const double d = w_of(tr.states[k + 1] - x_star[s]) - out.w.back();
      out.dw.push_back(d);
      out.max_increase = std::max(out.max_increase, d);
    }
  }
  if (out.dw.empty()) out.max_increase = 0.0;
  return out;
}

}  // namespace mtdcfc
