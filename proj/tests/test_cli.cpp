#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"

namespace mtdcfc {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("mtdcfc_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  /// Writes the reference configuration after `edit` and returns its path.
  template <typename F>
  std::string config_with(F edit, const std::string& name = "study.cfg") {
    std::ifstream in(MTDCFC_PAPER_CONFIG);
    auto j = nlohmann::json::parse(in);
    edit(j);
    const auto p = (dir_ / name).string();
    write_text(p, j.dump(2));
    return p;
  }

  CommandOptions opts(const std::string& config, const std::string& out) {
    CommandOptions o;
    o.config = config;
    o.out = (dir_ / out).string();
    return o;
  }

  int run_cli(const std::string& args) {
    const std::string cmd = std::string(MTDCFC_CLI) + " " + args + " > " + (dir_ / "stdout.txt").string() + " 2> " +
                            (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

TEST_F(CliTest, AnalyzeReferenceConfig) {
  const auto run = cmd_analyze(opts(MTDCFC_PAPER_CONFIG, "analyze"));
  const auto& st = run.report["stability"];
  EXPECT_EQ(st["certificate"], "HURWITZ_ONLY");
  EXPECT_EQ(st["assumption2"]["holds"], false);
  EXPECT_DOUBLE_EQ(st["assumption2"]["bound"].get<double>(), 3.75);
  EXPECT_NEAR(st["assumption1"]["k_phi"].get<double>(), 15.0, 1e-9);
  EXPECT_LT(st["spectral_abscissa"].get<double>(), 0.0);
  EXPECT_LT(run.report["equilibrium"]["kkt_gen_residual"].get<double>(), 1e-9);
  for (const auto& a : run.artifacts) EXPECT_TRUE(fs::exists(a.path)) << a.path;
  const auto reread = nlohmann::json::parse(read_file(run.artifacts.back().path));
  EXPECT_EQ(reread["stability"], st);
}

TEST_F(CliTest, AnalyzeGammaFourIsProven) {
  const auto cfg = config_with([](auto& j) { j["controller"]["gamma"] = 4.0; });
  const auto run = cmd_analyze(opts(cfg, "analyze"));
  EXPECT_EQ(run.report["stability"]["certificate"], "LYAPUNOV_PROVEN");
}

TEST_F(CliTest, NegativeCapacitanceExitsWithConfigError) {
  const auto cfg = config_with([](auto& j) { j["mtdc"]["nodes"][3]["cap"] = -0.1; });
  EXPECT_EQ(run_cli("analyze --config " + cfg + " --out " + (dir_ / "o").string()), 2);
  EXPECT_NE(read_file(dir_ / "stderr.txt").find("mtdc.nodes[3].cap"), std::string::npos);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run_cli("analyze --config " + std::string(MTDCFC_PAPER_CONFIG) + " --out " + (dir_ / "a").string()), 0);
  EXPECT_NE(read_file(dir_ / "stdout.txt").find("REPORT_JSON"), std::string::npos);
  EXPECT_EQ(run_cli("analyze --config " + std::string(MTDCFC_PAPER_CONFIG) + " --variant nope"), 2);
  EXPECT_EQ(run_cli("sweep --config " + std::string(MTDCFC_PAPER_CONFIG) + " --out " + (dir_ / "s").string()), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
  // a voltage collapse in nonlinear mode is a numerical abort
  const auto cfg = config_with([](auto& j) {
    j["scenario"]["mode"] = "nonlinear";
    j["scenario"]["t_end"] = 2.0;
    j["scenario"]["disturbances"][0]["magnitude"] = -400.0;
  });
  EXPECT_EQ(run_cli("simulate --config " + cfg + " --out " + (dir_ / "n").string()), 3);
  EXPECT_NE(read_file(dir_ / "stderr.txt").find("t = "), std::string::npos);
}

TEST_F(CliTest, UnwritableOutputDirectory) {
  write_text((dir_ / "file").string(), "x");
  auto o = opts(MTDCFC_PAPER_CONFIG, "file/sub");
  EXPECT_THROW(cmd_analyze(o), std::runtime_error);
}

TEST_F(CliTest, SimulateWritesFourSeries) {
  const auto run = cmd_simulate(opts(MTDCFC_PAPER_CONFIG, "sim"));
  ASSERT_EQ(run.artifacts.size(), 5u);
  const auto freq = read_csv(read_file(dir_ / "sim" / "frequencies.csv"));
  EXPECT_EQ(freq.columns, (std::vector<std::string>{"area0", "area1", "area2", "area3", "area4", "area5"}));
  EXPECT_NEAR(freq.times.back(), 45.0, 1e-9);
  EXPECT_LT((freq.values.bottomRows(1).array() - 1.0).abs().maxCoeff(), 1e-4);
  EXPECT_GT((freq.values.array() - 1.0).abs().maxCoeff(), 1e-4);  // the event is visible
  for (const char* name : {"dc_voltages", "generation", "injections"}) {
    const auto text = read_file(dir_ / "sim" / (std::string(name) + ".csv"));
    EXPECT_EQ(text.rfind("t,", 0), 0u) << name;
    EXPECT_EQ(read_csv(text).times.size(), freq.times.size()) << name;
  }
  // 17 significant digits, so every value reads back exactly
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(format_double(1.0), "1");
}

TEST_F(CliTest, JsonFormatCarriesTheSameSamples) {
  auto o = opts(MTDCFC_PAPER_CONFIG, "csv");
  cmd_simulate(o);
  o.out = (dir_ / "json").string();
  o.format = OutputFormat::Json;
  cmd_simulate(o);
  const auto j = nlohmann::json::parse(read_file(dir_ / "json" / "timeseries.json"));
  for (const char* name : {"frequencies", "dc_voltages", "generation", "injections"}) {
    const auto csv = read_csv(read_file(dir_ / "csv" / (std::string(name) + ".csv")));
    const auto& rows = j[name]["rows"];
    ASSERT_EQ(rows.size(), csv.times.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      ASSERT_EQ(rows[k][0].get<double>(), csv.times[k]);
      for (Eigen::Index c = 0; c < csv.values.cols(); ++c) {
        ASSERT_EQ(rows[k][static_cast<std::size_t>(c) + 1].get<double>(), csv.values(static_cast<Eigen::Index>(k), c));
      }
    }
  }
}

TEST_F(CliTest, ZeroDisturbanceStaysAtReference) {
  const auto cfg = config_with([](auto& j) {
    j["scenario"]["disturbances"] = nlohmann::json::array();
    j["scenario"]["t_end"] = 2.0;
  });
  cmd_simulate(opts(cfg, "sim"));
  EXPECT_TRUE((read_csv(read_file(dir_ / "sim" / "frequencies.csv")).values.array() == 1.0).all());
  EXPECT_TRUE((read_csv(read_file(dir_ / "sim" / "dc_voltages.csv")).values.array() == 1.0).all());
  EXPECT_TRUE((read_csv(read_file(dir_ / "sim" / "generation.csv")).values.array() == 0.0).all());
  EXPECT_TRUE((read_csv(read_file(dir_ / "sim" / "injections.csv")).values.array() == 0.0).all());
}

TEST_F(CliTest, SimulateIsByteStable) {
  const auto cfg = config_with([](auto& j) { j["scenario"]["t_end"] = 5.0; });
  cmd_simulate(opts(cfg, "a"));
  cmd_simulate(opts(cfg, "b"));
  for (const char* name : {"frequencies.csv", "dc_voltages.csv", "generation.csv", "injections.csv"}) {
    EXPECT_EQ(read_file(dir_ / "a" / name), read_file(dir_ / "b" / name)) << name;
  }
}

TEST_F(CliTest, CompareSummary) {
  const auto run = cmd_compare(opts(MTDCFC_PAPER_CONFIG, "cmp"));
  const auto& table = run.report["summary"];
  ASSERT_EQ(table.size(), 3u);
  for (const auto& row : table) {
    const auto v = row["variant"].get<std::string>();
    if (v == "dist_gen_dist_conv") {
      EXPECT_LT(row["generation_spread"].get<double>(), 1e-6);
      EXPECT_LT(row["static_freq_error"].get<double>(), 1e-9);
      EXPECT_LT(row["settling_time"].get<double>(), 1.0 + 6.0 * 1.5);
    } else {
      EXPECT_GT(row["generation_spread"].get<double>(), 1e-3) << v;
      EXPECT_GT(row["static_freq_error"].get<double>(), 1e-4) << v;
    }
  }
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "summary.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "cmp" / "dec_gen_dec_conv" / "frequencies.csv"));
}

TEST_F(CliTest, CompareZeroDisturbanceIsAllZero) {
  const auto cfg = config_with([](auto& j) {
    j["scenario"]["disturbances"] = nlohmann::json::array();
    j["scenario"]["t_end"] = 1.0;
  });
  const auto run = cmd_compare(opts(cfg, "cmp"));
  for (const auto& row : run.report["summary"]) {
    for (const char* k : {"static_freq_error", "terminal_freq_error", "weighted_voltage_error", "generation_spread",
                          "terminal_generation_spread", "settling_time"}) {
      EXPECT_EQ(row[k].get<double>(), 0.0) << k;
    }
  }
}

TEST_F(CliTest, SweepRows) {
  const auto cfg = config_with([](auto& j) { j["controller"]["gamma"] = 4.0; });
  auto o = opts(cfg, "sweep");
  const auto run = cmd_sweep(o);
  const auto& rows = run.report["sweep"];
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_GT(rows[0]["max_abs_omega"].get<double>(), rows[1]["max_abs_omega"].get<double>());
  EXPECT_GT(rows[1]["max_abs_omega"].get<double>(), rows[2]["max_abs_omega"].get<double>());
  const auto csv = read_file(dir_ / "sweep" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);

  o.scales = {1.0};
  o.out = (dir_ / "one").string();
  const auto one = cmd_sweep(o);
  const auto analyzed = cmd_analyze(opts(cfg, "an"));
  double max_w = 0.0;
  for (const auto& w : analyzed.report["equilibrium"]["omega_hat_star"]) max_w = std::max(max_w, std::abs(w.get<double>()));
  EXPECT_NEAR(one.report["sweep"][0]["max_abs_omega"].get<double>(), max_w, 1e-15);

  o.scales = {1.0, -2.0};
  o.out = (dir_ / "bad").string();
  const auto bad = cmd_sweep(o);
  EXPECT_EQ(bad.report["sweep"].size(), 2u);
  EXPECT_NE(bad.report["sweep"][1]["error"].get<std::string>(), "");
}

TEST_F(CliTest, SweepRejectsGammaZero) {
  EXPECT_THROW(cmd_sweep(opts(MTDCFC_PAPER_CONFIG, "sweep")), ConfigError);
}

}  // namespace
}  // namespace mtdcfc
