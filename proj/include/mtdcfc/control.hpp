#pragma once

// Generation and converter control laws (distributed and decentralized
// variants) and the gain/cost-weight algebra linking them to the dispatch
// objective.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mtdcfc/netgraph.hpp"

namespace mtdcfc {

/// Which generation law (distributed PI with averaging vs. pure droop) and
/// which converter law (consensus on phi vs. pure droop) are active.
enum class Variant {
  DistGenDistConv,
  DistGenDecConv,
  DecGenDecConv,
  DecGenDistConv,
};

constexpr bool distributed_generation(Variant v) noexcept {
  return v == Variant::DistGenDistConv || v == Variant::DistGenDecConv;
}

constexpr bool distributed_converter(Variant v) noexcept {
  return v == Variant::DistGenDistConv || v == Variant::DecGenDistConv;
}

constexpr std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::DistGenDistConv: return "dist_gen_dist_conv";
    case Variant::DistGenDecConv: return "dist_gen_dec_conv";
    case Variant::DecGenDecConv: return "dec_gen_dec_conv";
    case Variant::DecGenDistConv: return "dec_gen_dist_conv";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(std::string_view s) {
  for (auto v : {Variant::DistGenDistConv, Variant::DistGenDecConv, Variant::DecGenDecConv,
                 Variant::DecGenDistConv}) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

/// The three combinations compared in the reference experiment.
inline constexpr Variant kComparedVariants[] = {Variant::DecGenDecConv, Variant::DistGenDecConv,
                                                Variant::DistGenDistConv};

struct ControllerConfig {
  Variant variant = Variant::DistGenDistConv;
  std::vector<Vector> k_droop;    // per area, per bus
  std::vector<Vector> k_droop_i;  // per area, per bus
  Vector k_omega;                 // per converter (acts at bus 0 of its area)
  Vector k_v;                     // per converter
  std::optional<WeightedGraph> comm_eta;
  std::optional<WeightedGraph> comm_phi;
  double gamma = 0.0;
  double omega_ref = 1.0;
  Vector p_inj_nom;  // display offset added to reported injections; empty means zero

  std::size_t converters() const noexcept { return static_cast<std::size_t>(k_omega.size()); }

  void validate() const {
    const auto n = converters();
    if (n == 0) throw std::invalid_argument("controller: no converters");
    if (static_cast<std::size_t>(k_v.size()) != n || k_droop.size() != n || k_droop_i.size() != n) {
      throw std::invalid_argument("controller: gain vectors must have one entry per converter/area");
    }
    if (p_inj_nom.size() != 0 && static_cast<std::size_t>(p_inj_nom.size()) != n) {
      throw std::invalid_argument("controller: p_inj_nom size mismatch");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      if (!(k_omega(idx) > 0.0) || !std::isfinite(k_omega(idx))) {
        throw std::invalid_argument("controller: k_omega[" + std::to_string(i) + "] must be positive");
      }
      if (!(k_v(idx) > 0.0) || !std::isfinite(k_v(idx))) {
        throw std::invalid_argument("controller: k_v[" + std::to_string(i) + "] must be positive");
      }
      if (k_droop[i].size() != k_droop_i[i].size()) {
        throw std::invalid_argument("controller: droop vectors of area " + std::to_string(i) + " differ in size");
      }
      if (!(k_droop[i].array() >= 0.0).all() || !k_droop[i].allFinite()) {
        throw std::invalid_argument("controller: k_droop of area " + std::to_string(i) + " must be >= 0");
      }
      if (!(k_droop_i[i].array() > 0.0).all() || !k_droop_i[i].allFinite()) {
        throw std::invalid_argument("controller: k_droop_i of area " + std::to_string(i) + " must be > 0");
      }
    }
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("controller: gamma must be >= 0");
    auto check_graph = [&](const std::optional<WeightedGraph>& g, const char* name, bool required) {
      if (g && g->size() != n) {
        throw std::invalid_argument(std::string("controller: ") + name + " must span all converters");
      }
      if (required) {
        if (!g) throw std::invalid_argument(std::string("controller: ") + name + " required by variant");
        if (!is_connected(*g)) throw std::invalid_argument(std::string("controller: ") + name + " is not connected");
      }
    };
    check_graph(comm_eta, "comm_eta", distributed_generation(variant));
    check_graph(comm_phi, "comm_phi", distributed_converter(variant));
  }

  friend bool operator==(const ControllerConfig& a, const ControllerConfig& b) {
    return a.variant == b.variant && a.k_droop == b.k_droop && a.k_droop_i == b.k_droop_i &&
           a.k_omega == b.k_omega && a.k_v == b.k_v && a.comm_eta == b.comm_eta && a.comm_phi == b.comm_phi &&
           a.gamma == b.gamma && a.omega_ref == b.omega_ref && a.p_inj_nom == b.p_inj_nom;
  }
};

/// Quadratic cost weights: f^P per area for generation, f^V per converter
/// for DC voltage deviation.
struct CostWeights {
  Vector f_p;
  Vector f_v;

  friend bool operator==(const CostWeights&, const CostWeights&) = default;
};

struct GainSolution {
  Vector k_v;
  Vector k_droop_i;
  /// max_i |K^V_i K^droop,I_i / K^omega_i - 1/f^P_i|; zero when k_droop_i was solved for.
  double residual = 0.0;
};

/// Gains realizing the given costs at equilibrium: K^V = F^V and
/// K^V (K^omega)^-1 K^droop,I = (F^P)^-1. When `k_droop_i` is empty it is
/// solved for; otherwise the supplied gains are checked and the residual
/// reported.
inline GainSolution gains_from_costs(const CostWeights& costs, const Vector& k_omega, const Vector& k_droop_i = {}) {
  const auto n = costs.f_p.size();
  if (costs.f_v.size() != n || k_omega.size() != n || (k_droop_i.size() != 0 && k_droop_i.size() != n)) {
    throw std::invalid_argument("gains_from_costs: dimension mismatch");
  }
  if (!(costs.f_p.array() > 0.0).all() || !(costs.f_v.array() > 0.0).all()) {
    throw std::invalid_argument("gains_from_costs: cost weights must be positive");
  }
  GainSolution out;
  out.k_v = costs.f_v;
  if (k_droop_i.size() == 0) {
    out.k_droop_i = k_omega.array() / (out.k_v.array() * costs.f_p.array());
  } else {
    out.k_droop_i = k_droop_i;
    out.residual = (out.k_v.array() * k_droop_i.array() / k_omega.array() - costs.f_p.array().inverse())
                       .abs()
                       .maxCoeff();
  }
  if (!(out.k_droop_i.array() > 0.0).all() || !out.k_droop_i.allFinite()) {
    throw std::invalid_argument("gains_from_costs: infeasible, implied K^droop,I is not positive");
  }
  return out;
}

/// Forward map: the cost weights a set of gains minimizes.
inline CostWeights costs_from_gains(const Vector& k_v, const Vector& k_omega, const Vector& k_droop_i) {
  if (k_v.size() != k_omega.size() || k_v.size() != k_droop_i.size()) {
    throw std::invalid_argument("costs_from_gains: dimension mismatch");
  }
  return {k_omega.array() / (k_v.array() * k_droop_i.array()), k_v};
}

struct GenerationOutput {
  std::vector<Vector> p_gen;  // per area, per bus
  Vector eta_dot;             // per area
};

namespace detail {
inline void check_area_shapes(std::span<const Vector> omega_hat, const ControllerConfig& cfg) {
  if (omega_hat.size() != cfg.k_droop.size()) throw std::invalid_argument("control: area count mismatch");
  for (std::size_t i = 0; i < omega_hat.size(); ++i) {
    if (omega_hat[i].size() != cfg.k_droop[i].size()) {
      throw std::invalid_argument("control: bus count mismatch in area " + std::to_string(i));
    }
  }
}
}  // namespace detail

/// Distributed PI generation control with averaging on eta:
///   P^gen_{i_k} = -K^droop_{i_k} w_{i_k} - (K^V_i / K^omega_i) K^droop,I_{i_k} eta_i
///   eta_dot_i   = sum_k K^droop,I_{i_k} w_{i_k} - sum_j c^eta_ij (eta_i - eta_j)
inline GenerationOutput gen_control_distributed(std::span<const Vector> omega_hat, const Vector& eta,
                                                const ControllerConfig& cfg) {
  detail::check_area_shapes(omega_hat, cfg);
  const auto n = static_cast<Eigen::Index>(omega_hat.size());
  if (eta.size() != n) throw std::invalid_argument("gen_control_distributed: eta size mismatch");
  if (!cfg.comm_eta) throw std::invalid_argument("gen_control_distributed: comm_eta missing");
  GenerationOutput out;
  out.p_gen.reserve(omega_hat.size());
  out.eta_dot = -laplacian(*cfg.comm_eta) * eta;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(i);
    const double ratio = cfg.k_v(i) / cfg.k_omega(i);
    out.p_gen.push_back(-cfg.k_droop[a].cwiseProduct(omega_hat[a]) - ratio * eta(i) * cfg.k_droop_i[a]);
    out.eta_dot(i) += cfg.k_droop_i[a].dot(omega_hat[a]);
  }
  return out;
}

/// P^gen = -K^droop w, bus by bus.
inline std::vector<Vector> gen_control_decentralized(std::span<const Vector> omega_hat, const ControllerConfig& cfg) {
  detail::check_area_shapes(omega_hat, cfg);
  std::vector<Vector> p;
  p.reserve(omega_hat.size());
  for (std::size_t a = 0; a < omega_hat.size(); ++a) p.push_back(-cfg.k_droop[a].cwiseProduct(omega_hat[a]));
  return p;
}

struct ConverterOutput {
  Vector p_inj;
  Vector phi_dot;
};

/// Converter control with emulated AC coupling through phi:
///   P^inj_i   = K^omega_i w_{i_1} - K^V_i V_i + sum_j c^phi_ij (phi_i - phi_j)
///   phi_dot_i = (K^omega_i / K^V_i) w_{i_1} - gamma phi_i
/// with V the deviation from V^ref.
inline ConverterOutput conv_control_distributed(const Vector& omega_conv, const Vector& v_hat, const Vector& phi,
                                                const ControllerConfig& cfg) {
  const auto n = cfg.k_omega.size();
  if (omega_conv.size() != n || v_hat.size() != n || phi.size() != n) {
    throw std::invalid_argument("conv_control_distributed: dimension mismatch");
  }
  if (!cfg.comm_phi) throw std::invalid_argument("conv_control_distributed: comm_phi missing");
  ConverterOutput out;
  out.p_inj = cfg.k_omega.cwiseProduct(omega_conv) - cfg.k_v.cwiseProduct(v_hat) + laplacian(*cfg.comm_phi) * phi;
  out.phi_dot = cfg.k_omega.cwiseQuotient(cfg.k_v).cwiseProduct(omega_conv) - cfg.gamma * phi;
  return out;
}

inline Vector conv_control_decentralized(const Vector& omega_conv, const Vector& v_hat, const ControllerConfig& cfg) {
  const auto n = cfg.k_omega.size();
  if (omega_conv.size() != n || v_hat.size() != n) {
    throw std::invalid_argument("conv_control_decentralized: dimension mismatch");
  }
  return cfg.k_omega.cwiseProduct(omega_conv) - cfg.k_v.cwiseProduct(v_hat);
}

enum class PowerCurrentMode { Linear, Nonlinear };

/// Lowest absolute DC voltage (p.u.) accepted by the nonlinear relation.
inline constexpr double kMinNonlinearVoltage = 0.5;

/// Converter current from injected power: I = P / V^nom (Linear) or
/// I = P / V with V the absolute voltage (Nonlinear).
inline Vector power_to_current(const Vector& p_inj, const Vector& v, double v_nom, PowerCurrentMode mode) {
  if (mode == PowerCurrentMode::Linear) return p_inj / v_nom;
  if (v.size() != p_inj.size()) throw std::invalid_argument("power_to_current: dimension mismatch");
  if ((v.array().abs() < kMinNonlinearVoltage).any()) {
    throw std::domain_error("power_to_current: DC voltage below 0.5 p.u.");
  }
  return p_inj.cwiseQuotient(v);
}

}  // namespace mtdcfc
