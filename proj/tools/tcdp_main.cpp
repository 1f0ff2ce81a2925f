#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "tcdp/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dynamic portfolio optimization with transaction costs"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir;
  int workers = -1;
  std::uint64_t seed = 0;
  auto* solve = app.add_subcommand("solve", "Solve a model described by a JSON config");
  solve->add_option("config", config, "Config file")->required()->check(CLI::ExistingFile);
  auto* out_opt = solve->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  auto* workers_opt = solve->add_option("--workers", workers, "OpenMP threads, 0 = all")->check(CLI::NonNegativeNumber);
  auto* seed_opt = solve->add_option("--seed", seed, "Seed for Monte-Carlo diagnostics");

  std::string run_a, run_b, report;
  auto* compare = app.add_subcommand("compare", "Compare two run directories");
  compare->add_option("a", run_a, "First run")->required()->check(CLI::ExistingDirectory);
  compare->add_option("b", run_b, "Second run")->required()->check(CLI::ExistingDirectory);
  compare->add_option("--out", report, "Write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*solve) {
    tcdp::RunOverrides ov;
    if (*out_opt) ov.output_dir = out_dir;
    if (*workers_opt) ov.workers = workers;
    if (*seed_opt) ov.seed = seed;
    return tcdp::run_main(config, ov);
  }

  try {
    const auto rep = tcdp::compare_runs(run_a, run_b);
    std::cout << rep.dump(2) << "\n";
    if (!report.empty()) {
      std::ofstream f(report);
      if (!f) throw std::runtime_error("cannot write " + report);
      f << rep.dump(2) << "\n";
    }
  } catch (const tcdp::ConfigError& e) {
    std::cerr << "compare: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "compare: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
