#include "becpf/errors.hpp"
#include "becpf/experiments.hpp"
#include "becpf/spectral.hpp"

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

void apply_thread_cap() {
  const char* env = std::getenv("BECPF_THREADS");
  if (!env) return;
  const int n = std::atoi(env);
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

} // namespace

int main(int argc, char** argv) {
  apply_thread_cap();
  CLI::App app{"Finite-volume and limiting point fields of the ideal Bose gas"};
  app.require_subcommand(1);

  int d = 3;
  double beta = 1.0;
  auto* rhoc = app.add_subcommand("rhoc", "critical density rho_c(d, beta)");
  rhoc->add_option("--d", d, "dimension (>= 3)");
  rhoc->add_option("--beta", beta, "inverse temperature");

  std::string config_path, output_dir;
  becpf::SuiteOverrides over;
  std::optional<std::int64_t> N;
  std::optional<long> draws;
  std::optional<std::uint64_t> seed;
  std::vector<CLI::App*> suites;
  for (const std::string& name : becpf::suite_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " suite");
    sub->add_option("--config", config_path, "experiment config (JSON); the reference config if omitted");
    sub->add_option("--output-dir", output_dir, "overrides output_dir of the config");
    if (name == "laplace-finite") sub->add_option("--N", N, "particle number (replaces the density)");
    if (name == "sample") {
      sub->add_option("--draws", draws, "number of configurations");
      sub->add_option("--seed", seed, "stream seed");
    }
    if (name == "verify") sub->add_option("--criterion", over.criteria, "criteria to run (default all)");
    suites.push_back(sub);
  }

  std::string report_dir;
  auto* rep = app.add_subcommand("report", "summarize an artifact directory");
  rep->add_option("dir", report_dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : becpf::exit_config;
  }

  if (rhoc->parsed()) {
    try {
      std::printf("%.12g\n", becpf::critical_density(d, beta));
      return becpf::exit_pass;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return becpf::exit_code_for(e);
    }
  }
  if (rep->parsed()) return becpf::report(report_dir, std::cout, std::cerr);

  for (auto* sub : suites) {
    if (!sub->parsed()) continue;
    becpf::ExperimentConfig cfg;
    try {
      cfg = config_path.empty() ? becpf::reference_config() : becpf::load_config(config_path);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return becpf::exit_code_for(e);
    }
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    over.N = N;
    over.draws = draws;
    over.seed = seed;
    return becpf::run_suite(cfg, sub->get_name(), over, std::cout, std::cerr);
  }
  return becpf::exit_config;
}
