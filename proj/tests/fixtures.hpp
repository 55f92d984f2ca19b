#pragma once

// Shared test helpers: the bundled reference configuration, reproducible
// random grids, and a direct per-equation evaluation of the closed-loop
// right-hand side that does not go through the assembled matrices.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mtdcfc/mtdcfc.hpp"

namespace mtdcfc::testing {

inline Config paper_config() { return load_config(MTDCFC_PAPER_CONFIG); }

/// Reference MTDC grid and gains with one generator per area.
inline Grid paper_single_generator_grid(double gamma = 0.0) {
  Grid g = paper_config().grid;
  for (std::size_t a = 0; a < g.areas.size(); ++a) {
    g.areas[a].inertia = Vector::Constant(1, g.areas[a].inertia(0));
    g.areas[a].ac_lines = WeightedGraph(1, {});
    g.controller.k_droop[a] = Vector::Constant(1, g.controller.k_droop[a](0));
    g.controller.k_droop_i[a] = Vector::Constant(1, g.controller.k_droop_i[a](0));
  }
  g.controller.gamma = gamma;
  return g;
}

/// Platform-independent uniform draws: mt19937_64 is fully specified, the
/// distributions of <random> are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform(double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53); }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  Vector vector(Eigen::Index n, double lo, double hi) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 gen_;
};

/// Random connected graph: a random spanning tree plus a few extra edges.
inline WeightedGraph random_connected_graph(Rng& rng, std::size_t n, double wlo, double whi) {
  std::vector<Edge> edges;
  std::vector<std::vector<bool>> used(n, std::vector<bool>(n, false));
  for (std::size_t i = 1; i < n; ++i) {
    const auto j = rng.index(i);
    edges.push_back({j, i, rng.uniform(wlo, whi)});
    used[i][j] = used[j][i] = true;
  }
  const std::size_t extra = n > 2 ? rng.index(n) : 0;
  for (std::size_t e = 0; e < extra; ++e) {
    const auto i = rng.index(n), j = rng.index(n);
    if (i == j || used[i][j]) continue;
    used[i][j] = used[j][i] = true;
    edges.push_back({i, j, rng.uniform(wlo, whi)});
  }
  return WeightedGraph(n, std::move(edges));
}

struct RandomGridOptions {
  std::size_t min_converters = 2;
  std::size_t max_converters = 4;
  std::size_t max_buses = 3;
  Variant variant = Variant::DistGenDistConv;
  double gamma = -1.0;  // negative: random in [0, 5]
  bool proportional_phi = false;
  std::size_t max_segments = 1;
};

inline Grid random_grid(Rng& rng, const RandomGridOptions& o = {}) {
  const auto n = o.min_converters + rng.index(o.max_converters - o.min_converters + 1);
  Grid g;
  g.net.v_nom = rng.uniform(0.9, 1.1);
  g.net.cap = rng.vector(static_cast<Eigen::Index>(n), 0.5, 2.0);
  g.net.v_ref = rng.vector(static_cast<Eigen::Index>(n), 0.95, 1.05);
  const auto topo = random_connected_graph(rng, n, 1.0, 5.0);
  for (const auto& e : topo.edges()) {
    const auto seg = 1 + rng.index(o.max_segments);
    g.net.lines.push_back({e.i, e.j, 1.0 / e.w, rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3), seg});
  }
  auto& c = g.controller;
  c.variant = o.variant;
  for (std::size_t a = 0; a < n; ++a) {
    const auto nb = 1 + rng.index(o.max_buses);
    AcArea area;
    area.inertia = rng.vector(static_cast<Eigen::Index>(nb), 1.0, 5.0);
    area.ac_lines = random_connected_graph(rng, nb, 1.0, 5.0);
    g.areas.push_back(area);
    c.k_droop.push_back(rng.vector(static_cast<Eigen::Index>(nb), 0.5, 3.0));
    c.k_droop_i.push_back(rng.vector(static_cast<Eigen::Index>(nb), 0.5, 3.0));
  }
  c.k_omega = rng.vector(static_cast<Eigen::Index>(n), 1.0, 5.0);
  c.k_v = rng.vector(static_cast<Eigen::Index>(n), 1.0, 5.0);
  c.gamma = o.gamma < 0.0 ? rng.uniform(0.0, 5.0) : o.gamma;
  c.comm_eta = random_connected_graph(rng, n, 0.5, 3.0);
  if (o.proportional_phi) {
    const double k = rng.uniform(0.5, 3.0);
    std::vector<Edge> edges;
    for (const auto& l : g.net.lines) edges.push_back({l.from, l.to, k / l.r});
    c.comm_phi = WeightedGraph(n, std::move(edges));
  } else {
    c.comm_phi = random_connected_graph(rng, n, 0.5, 3.0);
  }
  return g;
}

/// x' evaluated equation by equation on the full-coordinate state.
inline Vector rhs_oracle(const Grid& g, PlantModel plant, const StateLayout& L, const Vector& x, const Vector& pm) {
  const auto& c = g.controller;
  const bool dg = distributed_generation(c.variant);
  const bool dc = distributed_converter(c.variant);
  const auto n = g.converters();
  Vector dx = Vector::Zero(x.size());
  auto at = [&](const std::string& b, std::size_t k) { return L.at(b).offset + static_cast<Eigen::Index>(k); };
  auto eta = [&](std::size_t i) { return x(at("eta", i)); };
  auto phi = [&](std::size_t i) { return x(at("phi", i)); };
  auto v = [&](std::size_t i) { return x(at("v", i)); };

  std::vector<double> p_inj(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    double p = c.k_omega(ii) * x(at(omega_block(i), 0)) - c.k_v(ii) * v(i);
    if (dc) {
      for (const auto& e : c.comm_phi->edges()) {
        if (e.i == i) p += e.w * (phi(i) - phi(e.j));
        if (e.j == i) p += e.w * (phi(i) - phi(e.i));
      }
    }
    p_inj[i] = p;
  }

  std::size_t bus = 0;
  for (std::size_t a = 0; a < n; ++a) {
    const auto ai = static_cast<Eigen::Index>(a);
    const auto& area = g.areas[a];
    double eta_dot = 0.0;
    for (std::size_t k = 0; k < area.size(); ++k, ++bus) {
      const auto kk = static_cast<Eigen::Index>(k);
      const double w = x(at(omega_block(a), k));
      dx(at(delta_block(a), k)) = w;
      double flow = 0.0;
      for (const auto& e : area.ac_lines.edges()) {
        if (e.i == k) flow += e.w * (x(at(delta_block(a), k)) - x(at(delta_block(a), e.j)));
        if (e.j == k) flow += e.w * (x(at(delta_block(a), k)) - x(at(delta_block(a), e.i)));
      }
      double p_gen = -c.k_droop[a](kk) * w;
      if (dg) p_gen -= c.k_v(ai) / c.k_omega(ai) * c.k_droop_i[a](kk) * eta(a);
      double p = -flow + p_gen + pm(static_cast<Eigen::Index>(bus));
      if (k == 0) p -= p_inj[a];
      dx(at(omega_block(a), k)) = p / area.inertia(kk);
      eta_dot += c.k_droop_i[a](kk) * w;
    }
    if (dg) {
      for (const auto& e : c.comm_eta->edges()) {
        if (e.i == a) eta_dot -= e.w * (eta(a) - eta(e.j));
        if (e.j == a) eta_dot -= e.w * (eta(a) - eta(e.i));
      }
      dx(at("eta", a)) = eta_dot;
    }
    if (dc) dx(at("phi", a)) = c.k_omega(ai) / c.k_v(ai) * x(at(omega_block(a), 0)) - c.gamma * phi(a);
  }

  std::vector<double> i_net(n, 0.0);  // current into each DC node from the lines
  for (std::size_t k = 0; k < g.net.lines.size(); ++k) {
    const auto& l = g.net.lines[k];
    if (plant == PlantModel::Resistive) {
      const double i = (v(l.from) - v(l.to)) / l.r;
      i_net[l.from] -= i;
      i_net[l.to] += i;
      continue;
    }
    const auto s = l.segments;
    const double r = l.r / static_cast<double>(s), ind = l.l / static_cast<double>(s);
    const double cl = l.c / static_cast<double>(s);
    auto cur = [&](std::size_t q) { return x(at(line_current_block(k), q)); };
    auto node = [&](std::size_t q) { return x(at(line_voltage_block(k), q)); };
    for (std::size_t q = 0; q < s; ++q) {
      const double left = q == 0 ? v(l.from) : node(q - 1);
      const double right = q + 1 == s ? v(l.to) : node(q);
      dx(at(line_current_block(k), q)) = (left - r * cur(q) - right) / ind;
      if (q + 1 < s) dx(at(line_voltage_block(k), q)) = (cur(q) - cur(q + 1)) / cl;
    }
    i_net[l.from] -= cur(0);
    i_net[l.to] += cur(s - 1);
  }
  for (std::size_t i = 0; i < n; ++i) {
    dx(at("v", i)) = (p_inj[i] / g.net.v_nom + i_net[i]) / g.net.cap(static_cast<Eigen::Index>(i));
  }
  return dx;
}

}  // namespace mtdcfc::testing
