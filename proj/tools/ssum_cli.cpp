// ssum run <config> | ssum check <config>
//
// Exit codes: 0 ok, 1 config error, 2 property failure, 3 runtime error.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ssum/errors.hpp"
#include "ssum/experiment.hpp"
#include "ssum/numeric.hpp"
#include "ssum/property_suite.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPropertyFailure = 2;
constexpr int kRuntimeError = 3;

struct Overrides {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

ssum::exp::ExperimentConfig load(const Overrides& o) {
  auto cfg = ssum::exp::ExperimentConfig::load(o.config_path);
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (o.seed) cfg.seed = *o.seed;
  if (o.threads) cfg.threads = *o.threads;
  cfg.validate();
  return cfg;
}

int cmd_run(const Overrides& o) {
  auto cfg = load(o);
  auto table = ssum::exp::run_experiment(cfg);
  auto files = ssum::exp::emit_plot_data(table, cfg, cfg.output_dir);
  for (const auto& m : cfg.methods) {
    auto rows = table.method_rows(m);
    if (rows.empty()) continue;
    std::cout << m << " iteration " << rows.back().iteration << " value "
              << ssum::format_double(rows.back().value) << " stderr "
              << ssum::format_double(rows.back().stderr_value) << "\n";
  }
  std::cout << "wrote " << files.size() << " data files and manifest.txt to " << cfg.output_dir
            << "\n";
  return kOk;
}

int cmd_check(const Overrides& o) {
  auto cfg = load(o);
  auto report = ssum::props::property_suite(cfg);
  std::string text = report.text();
  std::cout << text;
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    std::ofstream f(std::filesystem::path(o.out) / "check_report.txt");
    if (!f) throw ssum::IoError("cannot write check report to " + o.out);
    f << text;
  }
  return report.all_passed() ? kOk : kPropertyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic successive upper-bound minimization experiments"};
  app.require_subcommand(1);

  Overrides o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", o.config_path, "configuration file")->required();
    sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", o.seed, "master seed (overrides seed)");
    sub->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  };
  auto* run = app.add_subcommand("run", "run an experiment and write CSV results");
  auto* check = app.add_subcommand("check", "run the property suite");
  add_common(run);
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    return cmd_check(o);
  } catch (const ssum::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}
