#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "fixtures.hpp"

namespace mtdcfc {
namespace {

nlohmann::json paper_json() {
  std::ifstream in(MTDCFC_PAPER_CONFIG);
  return nlohmann::json::parse(in);
}

std::string error_path(const nlohmann::json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "<no error>";
}

TEST(Config, ReferenceConfigContents) {
  const auto cfg = testing::paper_config();
  const auto& g = cfg.grid;
  EXPECT_EQ(g.net.size(), 6u);
  EXPECT_EQ(g.net.lines.size(), 10u);
  EXPECT_EQ(g.net.cap, Vector::Constant(6, 0.375e-3));
  EXPECT_EQ(g.areas.size(), 6u);
  for (const auto& a : g.areas) EXPECT_EQ(a.size(), 14u);
  EXPECT_EQ(g.controller.k_omega, Vector::Constant(6, 1501.0));
  EXPECT_EQ(g.controller.k_v, Vector::Constant(6, 80.0));
  EXPECT_EQ(g.controller.gamma, 0.0);
  EXPECT_EQ(g.controller.variant, Variant::DistGenDistConv);
  EXPECT_EQ(g.controller.comm_eta->edges().size(), 5u);
  EXPECT_EQ(cfg.plant, PlantModel::Resistive);
  EXPECT_EQ(cfg.scenario.t_end, 45.0);
  EXPECT_EQ(cfg.scenario.dt, 1e-3);
  ASSERT_EQ(cfg.scenario.disturbances.size(), 1u);
  EXPECT_EQ(cfg.scenario.disturbances[0].time, 1.0);
  EXPECT_EQ(cfg.scenario.disturbances[0].event.magnitude, -0.2);
  // lines (0,1) and (1,2)
  EXPECT_EQ(g.net.lines[0].r, 0.0586);
  EXPECT_EQ(g.net.lines[2].r, 0.0878);
  EXPECT_EQ(g.net.lines[2].l, 0.3840e-3);
  EXPECT_EQ(g.net.lines[2].c, 0.0127);
}

TEST(Config, RoundTripReference) {
  const auto a = testing::paper_config();
  const auto text = serialize_config(a).dump(2);
  const auto b = parse_config_text(text);
  EXPECT_TRUE(a == b);
  EXPECT_EQ(serialize_config(b).dump(2), text);
}

TEST(Config, RoundTripRandom) {
  testing::Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    testing::RandomGridOptions o;
    o.max_segments = 3;
    o.variant = static_cast<Variant>(trial % 4);
    Config a;
    a.grid = testing::random_grid(rng, o);
    a.plant = trial % 2 ? PlantModel::PiLink : PlantModel::Resistive;
    a.scenario.t_end = 2.5;
    a.scenario.dt = 0.005;
    a.scenario.record_every = 3;
    a.scenario.mode = trial % 3 ? SimMode::Linear : SimMode::Nonlinear;
    a.scenario.disturbances = {{rng.uniform(0.0, 2.5), {0, 0, rng.uniform(-1.0, 1.0)}}};
    if (trial % 5 == 0) {
      a.costs = CostWeights{rng.vector(static_cast<Eigen::Index>(a.grid.converters()), 1.0, 2.0),
                            rng.vector(static_cast<Eigen::Index>(a.grid.converters()), 1.0, 2.0)};
    }
    const auto b = parse_config_text(serialize_config(a).dump());
    EXPECT_TRUE(a == b) << trial;
  }
}

TEST(Config, NegativeCapacitanceNamesField) {
  auto j = paper_json();
  j["mtdc"]["nodes"][3]["cap"] = -1.0;
  EXPECT_EQ(error_path(j), "mtdc.nodes[3].cap");
}

TEST(Config, FieldDiagnostics) {
  auto j = paper_json();
  j["mtdc"].erase("v_nom");
  EXPECT_EQ(error_path(j), "mtdc.v_nom");

  j = paper_json();
  j["mtdc"]["lines"][4]["j"] = 6;
  EXPECT_EQ(error_path(j), "mtdc.lines[4].j");

  j = paper_json();
  j["mtdc"]["lines"][1]["r"] = "fast";
  EXPECT_EQ(error_path(j), "mtdc.lines[1].r");

  j = paper_json();
  j["areas"][2]["generators"][5]["inertia"] = 0.0;
  EXPECT_EQ(error_path(j), "areas[2].generators[5].inertia");

  j = paper_json();
  j["areas"][0]["ac_lines"][0]["k"] = -3.0;
  EXPECT_EQ(error_path(j), "areas[0].ac_lines[0].k");

  j = paper_json();
  j["areas"][1]["converter_bus"] = 3;
  EXPECT_EQ(error_path(j), "areas[1].converter_bus");

  j = paper_json();
  j["controller"]["variant"] = "central";
  EXPECT_EQ(error_path(j), "controller.variant");

  j = paper_json();
  j["controller"]["k_v"].erase(0);
  EXPECT_EQ(error_path(j), "controller.k_v");

  j = paper_json();
  j["controller"].erase("comm_phi");
  EXPECT_EQ(error_path(j), "controller.comm_phi");

  j = paper_json();
  j["controller"]["comm_eta"] = nlohmann::json::array({{{"i", 0}, {"j", 1}, {"w", 1.0}}});
  EXPECT_EQ(error_path(j), "controller.comm_eta");

  j = paper_json();
  j["controller"]["gamma"] = -0.5;
  EXPECT_EQ(error_path(j), "controller.gamma");

  j = paper_json();
  j["scenario"]["dt"] = 0.05;
  EXPECT_EQ(error_path(j), "scenario.dt");

  j = paper_json();
  j["scenario"]["disturbances"][0]["bus"] = 14;
  EXPECT_EQ(error_path(j), "scenario.disturbances[0].bus");

  j = paper_json();
  j["scenario"]["disturbances"][0]["time"] = 100.0;
  EXPECT_EQ(error_path(j), "scenario.disturbances[0].time");

  j = paper_json();
  j["plant"] = "cable";
  EXPECT_EQ(error_path(j), "plant");

  j = paper_json();
  j["mtdc"]["lines"] = nlohmann::json::array({j["mtdc"]["lines"][0]});
  EXPECT_EQ(error_path(j), "mtdc.lines");
}

TEST(Config, MalformedJsonIsConfigError) {
  EXPECT_THROW(parse_config_text("{\"mtdc\": ", "broken.cfg"), ConfigError);
  EXPECT_THROW(parse_config_text("[]"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, PiLinkPlantNeedsInductance) {
  auto j = paper_json();
  j["plant"] = "pi_link";
  j["mtdc"]["lines"][2]["l"] = 0.0;
  EXPECT_EQ(error_path(j), "mtdc.lines[2].l");
}

}  // namespace
}  // namespace mtdcfc
