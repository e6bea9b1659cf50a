#pragma once

#include "becpf/acceptance.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace becpf {

struct ExperimentConfig {
  ModelParams model = AcceptanceConfig::reference_model();
  TestFunction f = TestFunction::single(3);
  std::vector<double> sweep{6.0, 8.0, 10.0, 12.0};
  AssemblyOptions assembly{};
  LimitOptions limit{};
  ContourOptions contour{};
  SamplerOptions sampler{};
  long draws = 10000;
  std::uint64_t seed = 20240601;
  std::filesystem::path output_dir = "becpf_out";
  // normalized config as JSON text, copied into the manifest
  std::string canonical;
};

// Unknown keys, malformed JSON (reported with line and column) and
// inadmissible physics all raise ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& file);
ExperimentConfig reference_config();
AcceptanceConfig acceptance_config(const ExperimentConfig& config);

enum ExitCode : int { exit_pass = 0, exit_acceptance_fail = 1, exit_config = 2, exit_numerical = 3 };

// exit code for an exception escaping a suite
int exit_code_for(const std::exception& e);

struct SuiteOverrides {
  std::optional<std::int64_t> N;       // laplace-finite
  std::optional<long> draws;           // sample
  std::optional<std::uint64_t> seed;   // sample
  std::vector<int> criteria;           // verify; empty runs all
};

const std::vector<std::string>& suite_names();

// Runs fugacity, laplace-finite, converge, sample or verify. CSV tables go to
// config.output_dir and to out; manifest.json records inputs and runtimes.
int run_suite(const ExperimentConfig& config, const std::string& suite, const SuiteOverrides& overrides,
              std::ostream& out, std::ostream& err);

// Pass/fail per acceptance criterion from a directory written by run_suite.
int report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

// %.17g
std::string format_double(double x);

} // namespace becpf
