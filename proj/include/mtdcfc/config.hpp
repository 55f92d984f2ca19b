#pragma once

// JSON study configuration: parsing with field-path diagnostics and a
// serializer whose output parses back to an identical Config.

#include <nlohmann/json.hpp>

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mtdcfc/assembly.hpp"
#include "mtdcfc/errors.hpp"
#include "mtdcfc/sim.hpp"

namespace mtdcfc {

struct Config {
  Grid grid;
  PlantModel plant = PlantModel::Resistive;
  std::optional<CostWeights> costs;
  Scenario scenario;

  friend bool operator==(const Config&, const Config&) = default;
};

constexpr std::string_view to_string(PlantModel p) noexcept {
  return p == PlantModel::Resistive ? "resistive" : "pi_link";
}
constexpr std::string_view to_string(SimMode m) noexcept { return m == SimMode::Linear ? "linear" : "nonlinear"; }
constexpr std::string_view to_string(Integrator i) noexcept {
  return i == Integrator::ExactZoh ? "exact_zoh" : "rk4";
}

namespace detail {

using nlohmann::json;

inline std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }
inline std::string key(const std::string& path, const char* k) { return path.empty() ? k : path + "." + k; }

inline const json& require(const json& j, const char* k, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  auto it = j.find(k);
  if (it == j.end()) throw ConfigError(key(path, k), "missing field");
  return *it;
}

inline double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "non-finite number");
  return v;
}

enum class Sign { Any, NonNegative, Positive };

inline double number(const json& obj, const char* k, const std::string& path, Sign sign = Sign::Any) {
  const auto p = key(path, k);
  const double v = number(require(obj, k, path), p);
  if (sign == Sign::Positive && !(v > 0.0)) throw ConfigError(p, "must be positive");
  if (sign == Sign::NonNegative && !(v >= 0.0)) throw ConfigError(p, "must be >= 0");
  return v;
}

inline std::size_t index(const json& obj, const char* k, const std::string& path, std::size_t bound) {
  const auto p = key(path, k);
  const auto& j = require(obj, k, path);
  if (!j.is_number_integer() || j.get<long long>() < 0) throw ConfigError(p, "expected a non-negative integer");
  const auto v = j.get<std::size_t>();
  if (v >= bound) throw ConfigError(p, "index " + std::to_string(v) + " out of range (size " + std::to_string(bound) + ")");
  return v;
}

inline const json& array(const json& obj, const char* k, const std::string& path) {
  const auto& j = require(obj, k, path);
  if (!j.is_array()) throw ConfigError(key(path, k), "expected an array");
  return j;
}

inline Vector vector(const json& obj, const char* k, const std::string& path, std::size_t size, Sign sign) {
  const auto& j = array(obj, k, path);
  const auto p = key(path, k);
  if (j.size() != size) {
    throw ConfigError(p, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
  }
  Vector v(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], idx(p, i));
    if (sign == Sign::Positive && !(v(static_cast<Eigen::Index>(i)) > 0.0)) throw ConfigError(idx(p, i), "must be positive");
  }
  return v;
}

inline std::string text(const json& obj, const char* k, const std::string& path) {
  const auto& j = require(obj, k, path);
  if (!j.is_string()) throw ConfigError(key(path, k), "expected a string");
  return j.get<std::string>();
}

inline WeightedGraph graph(const json& obj, const char* k, const std::string& path, std::size_t n, const char* weight) {
  const auto& j = array(obj, k, path);
  const auto p = key(path, k);
  std::vector<Edge> edges;
  for (std::size_t e = 0; e < j.size(); ++e) {
    const auto ep = idx(p, e);
    edges.push_back({index(j[e], "i", ep, n), index(j[e], "j", ep, n), number(j[e], weight, ep, Sign::Positive)});
  }
  try {
    return WeightedGraph(n, std::move(edges));
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(p, ex.what());
  }
}

inline MtdcNetwork parse_mtdc(const json& j, const std::string& path) {
  MtdcNetwork net;
  net.v_nom = number(j, "v_nom", path, Sign::Positive);
  const auto& nodes = array(j, "nodes", path);
  const auto n = nodes.size();
  if (n == 0) throw ConfigError(key(path, "nodes"), "no converter nodes");
  net.cap.resize(static_cast<Eigen::Index>(n));
  net.v_ref.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = idx(key(path, "nodes"), i);
    net.cap(static_cast<Eigen::Index>(i)) = number(nodes[i], "cap", p, Sign::Positive);
    net.v_ref(static_cast<Eigen::Index>(i)) = number(nodes[i], "v_ref", p, Sign::Positive);
  }
  const auto& lines = array(j, "lines", path);
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto p = idx(key(path, "lines"), k);
    MtdcLine l;
    l.from = index(lines[k], "i", p, n);
    l.to = index(lines[k], "j", p, n);
    if (l.from == l.to) throw ConfigError(p, "line connects a node to itself");
    l.r = number(lines[k], "r", p, Sign::Positive);
    l.l = number(lines[k], "l", p, Sign::NonNegative);
    l.c = number(lines[k], "c", p, Sign::NonNegative);
    if (lines[k].contains("segments")) {
      const auto& s = lines[k]["segments"];
      if (!s.is_number_integer() || s.get<long long>() < 1) throw ConfigError(key(p, "segments"), "must be an integer >= 1");
      l.segments = s.get<std::size_t>();
    }
    net.lines.push_back(l);
  }
  try {
    if (!is_connected(net.conductance_graph())) throw ConfigError(key(path, "lines"), "MTDC network is not connected");
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(key(path, "lines"), ex.what());
  }
  return net;
}

inline Variant variant_from(const std::string& s, const std::string& path) {
  if (auto v = parse_variant(s)) return *v;
  throw ConfigError(path, "unknown variant '" + s + "'");
}

}  // namespace detail

/// Parses a configuration document; every failure is a ConfigError naming
/// the offending field.
inline Config parse_config(const nlohmann::json& j) {
  using namespace detail;
  Config cfg;
  if (!j.is_object()) throw ConfigError("", "configuration must be a JSON object");

  cfg.grid.net = parse_mtdc(require(j, "mtdc", ""), "mtdc");
  const auto n = cfg.grid.net.size();

  const auto& areas = array(j, "areas", "");
  if (areas.size() != n) {
    throw ConfigError("areas", "expected one area per converter (" + std::to_string(n) + "), got " +
                                   std::to_string(areas.size()));
  }
  auto& ctl = cfg.grid.controller;
  for (std::size_t a = 0; a < n; ++a) {
    const auto p = idx("areas", a);
    const auto& gens = array(areas[a], "generators", p);
    const auto nb = gens.size();
    if (nb == 0) throw ConfigError(key(p, "generators"), "area has no buses");
    AcArea area;
    area.inertia.resize(static_cast<Eigen::Index>(nb));
    Vector kd(static_cast<Eigen::Index>(nb)), kdi(static_cast<Eigen::Index>(nb));
    for (std::size_t b = 0; b < nb; ++b) {
      const auto gp = idx(key(p, "generators"), b);
      const auto e = static_cast<Eigen::Index>(b);
      area.inertia(e) = number(gens[b], "inertia", gp, Sign::Positive);
      kd(e) = number(gens[b], "k_droop", gp, Sign::NonNegative);
      kdi(e) = number(gens[b], "k_droop_i", gp, Sign::Positive);
    }
    area.ac_lines = areas[a].contains("ac_lines") ? graph(areas[a], "ac_lines", p, nb, "k") : WeightedGraph(nb, {});
    if (!is_connected(area.ac_lines)) throw ConfigError(key(p, "ac_lines"), "AC area is not connected");
    if (areas[a].contains("converter_bus")) {
      if (index(areas[a], "converter_bus", p, nb) != 0) {
        throw ConfigError(key(p, "converter_bus"), "the converter must be on bus 0 (list its generator first)");
      }
    }
    cfg.grid.areas.push_back(std::move(area));
    ctl.k_droop.push_back(kd);
    ctl.k_droop_i.push_back(kdi);
  }

  const auto& c = require(j, "controller", "");
  ctl.variant = variant_from(text(c, "variant", "controller"), "controller.variant");
  ctl.k_omega = vector(c, "k_omega", "controller", n, Sign::Positive);
  ctl.k_v = vector(c, "k_v", "controller", n, Sign::Positive);
  ctl.gamma = c.contains("gamma") ? number(c, "gamma", "controller", Sign::NonNegative) : 0.0;
  ctl.omega_ref = c.contains("omega_ref") ? number(c, "omega_ref", "controller", Sign::Positive) : 1.0;
  if (c.contains("comm_eta")) ctl.comm_eta = graph(c, "comm_eta", "controller", n, "w");
  if (c.contains("comm_phi")) ctl.comm_phi = graph(c, "comm_phi", "controller", n, "w");
  if (c.contains("p_inj_nom")) ctl.p_inj_nom = vector(c, "p_inj_nom", "controller", n, Sign::Any);
  if (distributed_generation(ctl.variant) && !ctl.comm_eta) {
    throw ConfigError("controller.comm_eta", "required by variant " + std::string(to_string(ctl.variant)));
  }
  if (distributed_converter(ctl.variant) && !ctl.comm_phi) {
    throw ConfigError("controller.comm_phi", "required by variant " + std::string(to_string(ctl.variant)));
  }
  for (const char* name : {"comm_eta", "comm_phi"}) {
    const auto& g = std::string(name) == "comm_eta" ? ctl.comm_eta : ctl.comm_phi;
    if (g && !is_connected(*g)) throw ConfigError(std::string("controller.") + name, "graph is not connected");
  }

  if (j.contains("costs")) {
    const auto& cj = j["costs"];
    cfg.costs = CostWeights{vector(cj, "f_p", "costs", n, Sign::Positive), vector(cj, "f_v", "costs", n, Sign::Positive)};
  }

  if (j.contains("plant")) {
    const auto s = text(j, "plant", "");
    if (s == "resistive") {
      cfg.plant = PlantModel::Resistive;
    } else if (s == "pi_link") {
      cfg.plant = PlantModel::PiLink;
    } else {
      throw ConfigError("plant", "expected 'resistive' or 'pi_link'");
    }
  }

  const auto& s = require(j, "scenario", "");
  auto& sc = cfg.scenario;
  sc.t_end = number(s, "t_end", "scenario", Sign::Positive);
  sc.dt = number(s, "dt", "scenario", Sign::Positive);
  if (sc.dt > kMaxStep) throw ConfigError("scenario.dt", "must be <= 0.01 s");
  if (s.contains("mode")) {
    const auto m = text(s, "mode", "scenario");
    if (m == "linear") {
      sc.mode = SimMode::Linear;
    } else if (m == "nonlinear") {
      sc.mode = SimMode::Nonlinear;
    } else {
      throw ConfigError("scenario.mode", "expected 'linear' or 'nonlinear'");
    }
  }
  if (s.contains("integrator")) {
    const auto m = text(s, "integrator", "scenario");
    if (m == "exact_zoh") {
      sc.integrator = Integrator::ExactZoh;
    } else if (m == "rk4") {
      sc.integrator = Integrator::Rk4;
    } else {
      throw ConfigError("scenario.integrator", "expected 'exact_zoh' or 'rk4'");
    }
  }
  if (s.contains("record_every")) {
    const auto& r = s["record_every"];
    if (!r.is_number_integer() || r.get<long long>() < 1) throw ConfigError("scenario.record_every", "must be an integer >= 1");
    sc.record_every = r.get<std::size_t>();
  }
  if (s.contains("disturbances")) {
    const auto& ds = array(s, "disturbances", "scenario");
    for (std::size_t k = 0; k < ds.size(); ++k) {
      const auto p = idx("scenario.disturbances", k);
      TimedDisturbance d;
      d.time = number(ds[k], "time", p, Sign::NonNegative);
      if (d.time > sc.t_end) throw ConfigError(key(p, "time"), "after t_end");
      d.event.area = index(ds[k], "area", p, n);
      d.event.bus = index(ds[k], "bus", p, cfg.grid.areas[d.event.area].size());
      d.event.magnitude = number(ds[k], "magnitude", p);
      sc.disturbances.push_back(d);
    }
  }

  try {
    cfg.grid.validate();
    sc.validate();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("", ex.what());
  }
  if (cfg.plant == PlantModel::PiLink) {
    for (std::size_t k = 0; k < cfg.grid.net.lines.size(); ++k) {
      const auto& l = cfg.grid.net.lines[k];
      const auto p = idx("mtdc.lines", k);
      if (!(l.l > 0.0)) throw ConfigError(key(p, "l"), "pi-link plant needs inductance > 0");
      if (l.segments > 1 && !(l.c > 0.0)) throw ConfigError(key(p, "c"), "multi-segment pi-link needs capacitance > 0");
    }
  }
  return cfg;
}

inline Config parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw ConfigError(origin, ex.what());
  }
  return parse_config(j);
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open configuration file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

namespace detail {
inline nlohmann::json to_json(const Vector& v) {
  auto a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline nlohmann::json to_json(const WeightedGraph& g, const char* weight) {
  auto a = nlohmann::json::array();
  for (const auto& e : g.edges()) a.push_back({{"i", e.i}, {"j", e.j}, {weight, e.w}});
  return a;
}
}  // namespace detail

inline nlohmann::json serialize_config(const Config& cfg) {
  using nlohmann::json;
  const auto& g = cfg.grid;
  json mtdc{{"v_nom", g.net.v_nom}, {"nodes", json::array()}, {"lines", json::array()}};
  for (Eigen::Index i = 0; i < g.net.cap.size(); ++i) {
    mtdc["nodes"].push_back({{"cap", g.net.cap(i)}, {"v_ref", g.net.v_ref(i)}});
  }
  for (const auto& l : g.net.lines) {
    mtdc["lines"].push_back({{"i", l.from}, {"j", l.to}, {"r", l.r}, {"l", l.l}, {"c", l.c}, {"segments", l.segments}});
  }
  json areas = json::array();
  for (std::size_t a = 0; a < g.areas.size(); ++a) {
    json gens = json::array();
    for (Eigen::Index b = 0; b < g.areas[a].inertia.size(); ++b) {
      gens.push_back({{"inertia", g.areas[a].inertia(b)},
                      {"k_droop", g.controller.k_droop[a](b)},
                      {"k_droop_i", g.controller.k_droop_i[a](b)}});
    }
    areas.push_back({{"converter_bus", 0}, {"generators", gens}, {"ac_lines", detail::to_json(g.areas[a].ac_lines, "k")}});
  }
  const auto& c = g.controller;
  json ctl{{"variant", to_string(c.variant)},
           {"k_omega", detail::to_json(c.k_omega)},
           {"k_v", detail::to_json(c.k_v)},
           {"gamma", c.gamma},
           {"omega_ref", c.omega_ref}};
  if (c.comm_eta) ctl["comm_eta"] = detail::to_json(*c.comm_eta, "w");
  if (c.comm_phi) ctl["comm_phi"] = detail::to_json(*c.comm_phi, "w");
  if (c.p_inj_nom.size() != 0) ctl["p_inj_nom"] = detail::to_json(c.p_inj_nom);

  const auto& s = cfg.scenario;
  json dist = json::array();
  for (const auto& d : s.disturbances) {
    dist.push_back({{"time", d.time}, {"area", d.event.area}, {"bus", d.event.bus}, {"magnitude", d.event.magnitude}});
  }
  json scenario{{"t_end", s.t_end},
                {"dt", s.dt},
                {"mode", to_string(s.mode)},
                {"integrator", to_string(s.integrator)},
                {"record_every", s.record_every},
                {"disturbances", dist}};

  json out{{"plant", to_string(cfg.plant)}, {"mtdc", mtdc}, {"areas", areas}, {"controller", ctl}, {"scenario", scenario}};
  if (cfg.costs) out["costs"] = {{"f_p", detail::to_json(cfg.costs->f_p)}, {"f_v", detail::to_json(cfg.costs->f_v)}};
  return out;
}

}  // namespace mtdcfc
