#pragma once

// Physical plant: the MTDC grid (capacitive converter nodes joined by
// resistive lines or pi-link chains) and the AC areas (linearized swing
// equation networks, one per converter).

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "mtdcfc/netgraph.hpp"

namespace mtdcfc {

/// One HVDC line. r, l and c are line totals in p.u.; a chain model splits
/// them evenly over `segments` pi-links.
struct MtdcLine {
  std::size_t from = 0;
  std::size_t to = 0;
  double r = 0.0;
  double l = 0.0;
  double c = 0.0;
  std::size_t segments = 1;

  friend bool operator==(const MtdcLine&, const MtdcLine&) = default;
};

struct MtdcNetwork {
  double v_nom = 1.0;
  Vector cap;    // C_i, converter plus lumped line capacitance
  Vector v_ref;  // V_i^ref
  std::vector<MtdcLine> lines;

  std::size_t size() const noexcept { return static_cast<std::size_t>(cap.size()); }

  WeightedGraph conductance_graph() const {
    std::vector<Edge> edges;
    edges.reserve(lines.size());
    for (const auto& l : lines) edges.push_back({l.from, l.to, 1.0 / l.r});
    return WeightedGraph(size(), std::move(edges));
  }

  std::vector<DirectedLine> directed_lines() const {
    std::vector<DirectedLine> out;
    out.reserve(lines.size());
    for (const auto& l : lines) out.push_back({l.from, l.to});
    return out;
  }

  void validate() const {
    if (size() == 0) throw std::invalid_argument("MTDC network has no nodes");
    if (v_ref.size() != cap.size()) {
      throw std::invalid_argument("MTDC network: v_ref and cap sizes differ");
    }
    if (!std::isfinite(v_nom) || v_nom <= 0.0) {
      throw std::invalid_argument("MTDC network: v_nom must be positive");
    }
    require_finite(v_ref, "MTDC network v_ref");
    for (Eigen::Index i = 0; i < cap.size(); ++i) {
      if (!std::isfinite(cap(i)) || cap(i) <= 0.0) {
        throw std::invalid_argument("MTDC node " + std::to_string(i) + ": capacitance must be positive");
      }
    }
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const auto& l = lines[k];
      const auto tag = "MTDC line " + std::to_string(k);
      if (!(std::isfinite(l.r) && l.r > 0.0)) throw std::invalid_argument(tag + ": resistance must be positive");
      if (!(std::isfinite(l.l) && l.l >= 0.0)) throw std::invalid_argument(tag + ": inductance must be >= 0");
      if (!(std::isfinite(l.c) && l.c >= 0.0)) throw std::invalid_argument(tag + ": capacitance must be >= 0");
      if (l.segments < 1) throw std::invalid_argument(tag + ": segments must be >= 1");
    }
    if (!is_connected(conductance_graph())) {
      throw std::invalid_argument("MTDC network is not connected");
    }
  }

  friend bool operator==(const MtdcNetwork& a, const MtdcNetwork& b) {
    return a.v_nom == b.v_nom && a.cap == b.cap && a.v_ref == b.v_ref && a.lines == b.lines;
  }
};

/// One asynchronous AC grid. Bus 0 hosts the converter; a single-generator
/// area is the one-bus case with no AC lines.
struct AcArea {
  Vector inertia;  // m_{i_k}
  WeightedGraph ac_lines;
  std::size_t converter_bus = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(inertia.size()); }

  void validate() const {
    if (size() == 0) throw std::invalid_argument("AC area has no buses");
    if (ac_lines.size() != size()) throw std::invalid_argument("AC area: line graph size mismatch");
    if (converter_bus != 0) throw std::invalid_argument("AC area: converter must sit on bus 0");
    for (Eigen::Index k = 0; k < inertia.size(); ++k) {
      if (!std::isfinite(inertia(k)) || inertia(k) <= 0.0) {
        throw std::invalid_argument("AC bus " + std::to_string(k) + ": inertia must be positive");
      }
    }
    if (!is_connected(ac_lines)) throw std::invalid_argument("AC area lines are not connected");
  }

  friend bool operator==(const AcArea& a, const AcArea& b) {
    return a.inertia == b.inertia && a.ac_lines == b.ac_lines && a.converter_bus == b.converter_bus;
  }
};

struct ResistiveMatrices {
  Matrix e;    // diag(1/C_i)
  Matrix l_r;  // Laplacian with weights 1/R_ij
};

inline ResistiveMatrices mtdc_resistive_matrices(const MtdcNetwork& net) {
  net.validate();
  return {net.cap.cwiseInverse().asDiagonal().toDenseMatrix(), laplacian(net.conductance_graph())};
}

struct SwingMatrices {
  Matrix m;     // diag(1/m_{i_k})
  Matrix l_ac;  // Laplacian with weights k_{i_k j}
  Matrix s;     // ones_complement(n_i)
};

inline SwingMatrices ac_swing_matrices(const AcArea& area) {
  area.validate();
  return {area.inertia.cwiseInverse().asDiagonal().toDenseMatrix(), laplacian(area.ac_lines),
          ones_complement(area.size())};
}

/// Per-segment parameters of the pi-link chains, one diagonal entry per line.
struct PiLinkMatrices {
  Matrix d_in;
  Matrix d_out;
  Matrix r;       // R_k = R_total / segments
  Matrix l;       // L_k = L_total / segments
  Matrix c_line;  // C_k^line = C_total / segments (used only when segments > 1)
  std::vector<std::size_t> segments;
};

inline PiLinkMatrices pi_link_matrices(const MtdcNetwork& net) {
  net.validate();
  const auto m = static_cast<Eigen::Index>(net.lines.size());
  auto inc = line_incidence(net.directed_lines(), net.size());
  PiLinkMatrices out{std::move(inc.d_in), std::move(inc.d_out), Matrix::Zero(m, m), Matrix::Zero(m, m),
                     Matrix::Zero(m, m), {}};
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& line = net.lines[static_cast<std::size_t>(k)];
    if (line.l <= 0.0) {
      throw std::invalid_argument("MTDC line " + std::to_string(k) + ": pi-link model needs inductance > 0");
    }
    if (line.segments > 1 && line.c <= 0.0) {
      throw std::invalid_argument("MTDC line " + std::to_string(k) +
                                  ": multi-segment pi-link needs capacitance > 0");
    }
    const double seg = static_cast<double>(line.segments);
    out.r(k, k) = line.r / seg;
    out.l(k, k) = line.l / seg;
    out.c_line(k, k) = line.c / seg;
    out.segments.push_back(line.segments);
  }
  return out;
}

}  // namespace mtdcfc
