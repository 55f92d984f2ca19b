#pragma once

// Closed-loop linear models x' = A x + B_dist P^m for every combination of
// plant (resistive MTDC or pi-link chains) and controller variant, in full
// coordinates or with the uniform delta / phi directions removed.

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mtdcfc/control.hpp"
#include "mtdcfc/netgraph.hpp"
#include "mtdcfc/plant.hpp"

namespace mtdcfc {

/// Plant, areas and controller of one study.
struct Grid {
  MtdcNetwork net;
  std::vector<AcArea> areas;
  ControllerConfig controller;

  std::size_t converters() const noexcept { return net.size(); }

  std::size_t bus_count() const noexcept {
    std::size_t n = 0;
    for (const auto& a : areas) n += a.size();
    return n;
  }

  /// Global index of bus 0 of each area; buses are numbered area by area.
  std::vector<std::size_t> bus_offsets() const {
    std::vector<std::size_t> off;
    off.reserve(areas.size());
    std::size_t acc = 0;
    for (const auto& a : areas) {
      off.push_back(acc);
      acc += a.size();
    }
    return off;
  }

  bool single_generator_areas() const noexcept {
    for (const auto& a : areas) {
      if (a.size() != 1) return false;
    }
    return true;
  }

  void validate() const {
    net.validate();
    if (areas.size() != net.size()) throw std::invalid_argument("grid: need exactly one AC area per converter");
    for (const auto& a : areas) a.validate();
    controller.validate();
    if (controller.converters() != net.size()) throw std::invalid_argument("grid: controller size mismatch");
    for (std::size_t i = 0; i < areas.size(); ++i) {
      if (static_cast<std::size_t>(controller.k_droop[i].size()) != areas[i].size()) {
        throw std::invalid_argument("grid: droop gains of area " + std::to_string(i) + " do not match its buses");
      }
    }
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

enum class PlantModel { Resistive, PiLink };

struct Block {
  std::string name;
  Eigen::Index offset = 0;
  Eigen::Index size = 0;
};

/// Ordered, contiguous named blocks of the state vector.
class StateLayout {
 public:
  void add(std::string name, Eigen::Index size) {
    if (contains(name)) throw std::invalid_argument("StateLayout: duplicate block " + name);
    blocks_.push_back({std::move(name), dim_, size});
    dim_ += size;
  }

  bool contains(const std::string& name) const noexcept {
    for (const auto& b : blocks_) {
      if (b.name == name) return true;
    }
    return false;
  }

  const Block& at(const std::string& name) const {
    for (const auto& b : blocks_) {
      if (b.name == name) return b;
    }
    throw std::out_of_range("StateLayout: no block named " + name);
  }

  template <typename V>
  auto segment(V&& x, const std::string& name) const {
    const auto& b = at(name);
    return std::forward<V>(x).segment(b.offset, b.size);
  }

  Eigen::Index dim() const noexcept { return dim_; }
  const std::vector<Block>& blocks() const noexcept { return blocks_; }

 private:
  std::vector<Block> blocks_;
  Eigen::Index dim_ = 0;
};

inline std::string delta_block(std::size_t area) { return "delta" + std::to_string(area); }
inline std::string omega_block(std::size_t area) { return "omega" + std::to_string(area); }
inline std::string line_current_block(std::size_t line) { return "line" + std::to_string(line) + ".i"; }
inline std::string line_voltage_block(std::size_t line) { return "line" + std::to_string(line) + ".v"; }

struct ClosedLoopModel {
  Matrix a;
  Matrix b_dist;  // one column per bus, in global bus order
  Matrix output;  // y = [omega_hat (all buses); V_hat]
  StateLayout layout;
  /// Maps this model's state to full coordinates (identity unless reduced).
  Matrix to_full;
  StateLayout full_layout;
  PlantModel plant = PlantModel::Resistive;
  Variant variant = Variant::DistGenDistConv;
  bool reduced = false;
  /// False when the model combines features no stability result covers.
  bool certified = true;
  std::vector<std::string> warnings;
  std::shared_ptr<const Grid> grid;

  Eigen::Index dim() const noexcept { return a.rows(); }
};

struct PiLinkOptions {
  /// Allow multi-generator areas with pi-link lines. The model is built but
  /// flagged as not covered by a stability certificate.
  bool allow_multi_generator = false;
};

namespace detail {

inline StateLayout full_layout_for(const Grid& g, PlantModel plant) {
  StateLayout l;
  for (std::size_t a = 0; a < g.areas.size(); ++a) {
    const auto n = static_cast<Eigen::Index>(g.areas[a].size());
    l.add(delta_block(a), n);
    l.add(omega_block(a), n);
  }
  const auto n = static_cast<Eigen::Index>(g.converters());
  l.add("v", n);
  if (distributed_generation(g.controller.variant)) l.add("eta", n);
  if (distributed_converter(g.controller.variant)) l.add("phi", n);
  if (plant == PlantModel::PiLink) {
    for (std::size_t k = 0; k < g.net.lines.size(); ++k) {
      const auto seg = static_cast<Eigen::Index>(g.net.lines[k].segments);
      l.add(line_current_block(k), seg);
      l.add(line_voltage_block(k), seg - 1);
    }
  }
  return l;
}

inline ClosedLoopModel assemble_full(const Grid& grid, PlantModel plant) {
  grid.validate();
  const auto& cfg = grid.controller;
  const auto& net = grid.net;
  const auto n = static_cast<Eigen::Index>(grid.converters());
  const bool dist_gen = distributed_generation(cfg.variant);
  const bool dist_conv = distributed_converter(cfg.variant);

  ClosedLoopModel m;
  m.layout = full_layout_for(grid, plant);
  m.full_layout = m.layout;
  m.plant = plant;
  m.variant = cfg.variant;
  const auto N = m.layout.dim();
  m.a = Matrix::Zero(N, N);
  m.b_dist = Matrix::Zero(N, static_cast<Eigen::Index>(grid.bus_count()));
  m.output = Matrix::Zero(static_cast<Eigen::Index>(grid.bus_count()) + n, N);

  const auto res = mtdc_resistive_matrices(net);
  const Matrix l_phi = dist_conv ? laplacian(*cfg.comm_phi) : Matrix::Zero(n, n);
  const Matrix l_eta = dist_gen ? laplacian(*cfg.comm_eta) : Matrix::Zero(n, n);
  const auto v0 = m.layout.at("v").offset;
  const auto e0 = dist_gen ? m.layout.at("eta").offset : Eigen::Index{-1};
  const auto p0 = dist_conv ? m.layout.at("phi").offset : Eigen::Index{-1};
  const double v_nom = net.v_nom;

  Eigen::Index bus = 0;
  for (std::size_t ai = 0; ai < grid.areas.size(); ++ai) {
    const auto i = static_cast<Eigen::Index>(ai);
    const auto& area = grid.areas[ai];
    const auto sw = ac_swing_matrices(area);
    const auto d0 = m.layout.at(delta_block(ai)).offset;
    const auto w0 = m.layout.at(omega_block(ai)).offset;
    const auto nb = static_cast<Eigen::Index>(area.size());
    const auto& kd = cfg.k_droop[ai];
    const auto& kdi = cfg.k_droop_i[ai];

    for (Eigen::Index k = 0; k < nb; ++k) {
      const double inv_m = 1.0 / area.inertia(k);
      const auto row = w0 + k;
      m.a(d0 + k, row) = 1.0;
      m.a(row, row) -= inv_m * kd(k);
      m.a.block(row, d0, 1, nb) -= inv_m * sw.l_ac.row(k);
      if (dist_gen) m.a(row, e0 + i) -= inv_m * cfg.k_v(i) / cfg.k_omega(i) * kdi(k);
      m.b_dist(row, bus + k) = inv_m;
      m.output(bus + k, row) = 1.0;
    }
    // converter bus: -P^inj = -K^omega w + K^V V - L_phi phi
    const double inv_m0 = 1.0 / area.inertia(0);
    m.a(w0, w0) -= inv_m0 * cfg.k_omega(i);
    m.a(w0, v0 + i) += inv_m0 * cfg.k_v(i);
    if (dist_conv) m.a.block(w0, p0, 1, n) -= inv_m0 * l_phi.row(i);

    const double e_i = res.e(i, i);
    m.a(v0 + i, w0) += e_i * cfg.k_omega(i) / v_nom;
    m.a(v0 + i, v0 + i) -= e_i * cfg.k_v(i) / v_nom;
    if (dist_conv) m.a.block(v0 + i, p0, 1, n) += e_i / v_nom * l_phi.row(i);

    if (dist_gen) {
      m.a.block(e0 + i, w0, 1, nb) += kdi.transpose();
    }
    if (dist_conv) {
      m.a(p0 + i, w0) += cfg.k_omega(i) / cfg.k_v(i);
      m.a(p0 + i, p0 + i) -= cfg.gamma;
    }
    bus += nb;
  }
  m.output.block(bus, v0, n, n).setIdentity();
  if (dist_gen) m.a.block(e0, e0, n, n) -= l_eta;

  if (plant == PlantModel::Resistive) {
    m.a.block(v0, v0, n, n) -= res.e * res.l_r;
  } else {
    const auto pi = pi_link_matrices(net);
    for (std::size_t kk = 0; kk < net.lines.size(); ++kk) {
      const auto k = static_cast<Eigen::Index>(kk);
      const auto& line = net.lines[kk];
      const auto seg = static_cast<Eigen::Index>(line.segments);
      const auto i0 = m.layout.at(line_current_block(kk)).offset;
      const auto c0 = m.layout.at(line_voltage_block(kk)).offset;
      const double r = pi.r(k, k);
      const double inv_l = 1.0 / pi.l(k, k);
      const auto from = static_cast<Eigen::Index>(line.from);
      const auto to = static_cast<Eigen::Index>(line.to);
      for (Eigen::Index q = 0; q < seg; ++q) {
        const auto row = i0 + q;
        m.a(row, row) -= r * inv_l;
        if (q == 0) {
          m.a(row, v0 + from) += inv_l;
        } else {
          m.a(row, c0 + q - 1) += inv_l;
        }
        if (q == seg - 1) {
          m.a(row, v0 + to) -= inv_l;
        } else {
          m.a(row, c0 + q) -= inv_l;
        }
      }
      if (seg > 1) {
        const double inv_c = 1.0 / pi.c_line(k, k);
        for (Eigen::Index q = 0; q + 1 < seg; ++q) {
          m.a(c0 + q, i0 + q) += inv_c;
          m.a(c0 + q, i0 + q + 1) -= inv_c;
        }
      }
      m.a(v0 + from, i0) -= res.e(from, from);
      m.a(v0 + to, i0 + seg - 1) += res.e(to, to);
    }
  }

  m.to_full = Matrix::Identity(N, N);
  m.grid = std::make_shared<const Grid>(grid);
  require_finite(m.a, "closed-loop state matrix");
  return m;
}

}  // namespace detail

/// Orthonormal change of coordinates removing the uniform direction of
/// every delta block and of phi. Returns T with x_full = T x_reduced; the
/// reduced model is (T' A T, T' B).
inline ClosedLoopModel reduce(const ClosedLoopModel& full) {
  if (full.reduced) throw std::invalid_argument("reduce: model is already reduced");
  ClosedLoopModel r;
  Eigen::Index reduced_dim = 0;
  for (const auto& b : full.layout.blocks()) {
    const bool drop = (b.name.rfind("delta", 0) == 0 || b.name == "phi") && b.size > 0;
    r.layout.add(b.name, drop ? b.size - 1 : b.size);
    reduced_dim += drop ? b.size - 1 : b.size;
  }
  Matrix t = Matrix::Zero(full.dim(), reduced_dim);
  for (const auto& b : full.layout.blocks()) {
    const auto& rb = r.layout.at(b.name);
    if (rb.size == b.size) {
      t.block(b.offset, rb.offset, b.size, b.size).setIdentity();
    } else {
      t.block(b.offset, rb.offset, b.size, rb.size) = ones_complement(static_cast<std::size_t>(b.size));
    }
  }
  r.a = t.transpose() * full.a * t;
  r.b_dist = t.transpose() * full.b_dist;
  r.output = full.output * t;
  r.to_full = full.to_full * t;
  r.full_layout = full.full_layout;
  r.plant = full.plant;
  r.variant = full.variant;
  r.reduced = true;
  r.certified = full.certified;
  r.warnings = full.warnings;
  r.grid = full.grid;
  return r;
}

inline ClosedLoopModel assemble_resistive(const Grid& grid, bool reduced) {
  auto full = detail::assemble_full(grid, PlantModel::Resistive);
  return reduced ? reduce(full) : full;
}

inline ClosedLoopModel assemble_pi_link(const Grid& grid, bool reduced, PiLinkOptions opts = {}) {
  bool multi = !grid.single_generator_areas();
  if (multi && !opts.allow_multi_generator) {
    throw std::invalid_argument("assemble_pi_link: pi-link lines require single-generator areas");
  }
  auto full = detail::assemble_full(grid, PlantModel::PiLink);
  if (multi) {
    full.certified = false;
    full.warnings.push_back("pi-link lines with multi-generator areas: no stability certificate");
  }
  return reduced ? reduce(full) : full;
}

inline ClosedLoopModel assemble(const Grid& grid, PlantModel plant, bool reduced, PiLinkOptions opts = {}) {
  return plant == PlantModel::Resistive ? assemble_resistive(grid, reduced) : assemble_pi_link(grid, reduced, opts);
}

struct Disturbance {
  std::size_t area = 0;
  std::size_t bus = 0;
  double magnitude = 0.0;  // P^m step in p.u.; a generation loss is negative

  friend bool operator==(const Disturbance&, const Disturbance&) = default;
};

/// Per-bus P^m vector (global bus order) for a list of disturbances.
inline Vector disturbance_map(const ClosedLoopModel& model, const std::vector<Disturbance>& ds) {
  const auto& g = *model.grid;
  const auto off = g.bus_offsets();
  Vector u = Vector::Zero(static_cast<Eigen::Index>(g.bus_count()));
  for (const auto& d : ds) {
    if (d.area >= g.areas.size() || d.bus >= g.areas[d.area].size()) {
      throw std::out_of_range("disturbance: unknown bus " + std::to_string(d.bus) + " in area " +
                              std::to_string(d.area));
    }
    u(static_cast<Eigen::Index>(off[d.area] + d.bus)) += d.magnitude;
  }
  return u;
}

/// Powers reconstructed from a state through the control laws.
struct PowerFlows {
  std::vector<Vector> p_gen;  // per area, per bus
  Vector p_inj;               // per converter, without the display offset
  Vector omega_conv;          // converter-bus frequency deviation
  Vector v_hat;
};

inline PowerFlows evaluate_powers(const ClosedLoopModel& model, const Vector& x) {
  const auto& g = *model.grid;
  const auto& cfg = g.controller;
  const Vector xf = model.to_full * x;
  const auto& L = model.full_layout;
  const auto n = static_cast<Eigen::Index>(g.converters());
  std::vector<Vector> omega;
  omega.reserve(g.areas.size());
  PowerFlows out;
  out.omega_conv.resize(n);
  for (std::size_t a = 0; a < g.areas.size(); ++a) {
    omega.push_back(L.segment(xf, omega_block(a)));
    out.omega_conv(static_cast<Eigen::Index>(a)) = omega.back()(0);
  }
  out.v_hat = L.segment(xf, "v");
  if (distributed_generation(model.variant)) {
    out.p_gen = gen_control_distributed(omega, L.segment(xf, "eta"), cfg).p_gen;
  } else {
    out.p_gen = gen_control_decentralized(omega, cfg);
  }
  if (distributed_converter(model.variant)) {
    out.p_inj = conv_control_distributed(out.omega_conv, out.v_hat, L.segment(xf, "phi"), cfg).p_inj;
  } else {
    out.p_inj = conv_control_decentralized(out.omega_conv, out.v_hat, cfg);
  }
  return out;
}

}  // namespace mtdcfc
