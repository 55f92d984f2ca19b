// Command line front end: mtdcfc {analyze|simulate|compare|sweep} --config FILE

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "mtdcfc/commands.hpp"

int main(int argc, char** argv) {
  using namespace mtdcfc;
  CLI::App app{"Frequency control of AC areas coupled through an MTDC grid"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string format = "csv";
  std::string variant;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "study configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory")->capture_default_str();
  };
  auto* analyze = app.add_subcommand("analyze", "stability report and equilibrium");
  auto* simulate = app.add_subcommand("simulate", "time-domain simulation of the configured scenario");
  auto* compare = app.add_subcommand("compare", "simulate the three controller combinations");
  auto* sweep = app.add_subcommand("sweep", "equilibrium under jointly scaled K^omega and K^droop,I");
  for (auto* sub : {analyze, simulate, compare, sweep}) add_common(sub);
  for (auto* sub : {analyze, simulate}) {
    sub->add_option("--variant", variant, "override controller.variant");
  }
  for (auto* sub : {simulate, compare}) {
    sub->add_option("--format", format, "time-series format")->check(CLI::IsMember({"csv", "json"}));
  }
  sweep->add_option("--scales", opts.scales, "scale factors")->delimiter(',')->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    opts.format = format == "json" ? OutputFormat::Json : OutputFormat::Csv;
    if (!variant.empty()) {
      opts.variant = parse_variant(variant);
      if (!opts.variant) throw ConfigError("--variant", "unknown variant '" + variant + "'");
    }
    RunReport run;
    if (*analyze) {
      run = cmd_analyze(opts);
    } else if (*simulate) {
      run = cmd_simulate(opts);
    } else if (*compare) {
      run = cmd_compare(opts);
    } else {
      run = cmd_sweep(opts);
    }
    for (const auto& a : run.artifacts) std::cout << to_string(a.kind) << " " << a.path << "\n";
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
