#pragma once

#include "becpf/assembly.hpp"
#include "becpf/contour.hpp"
#include "becpf/limit_field.hpp"
#include "becpf/sampler.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace becpf {

struct AcceptanceConfig {
  ModelParams model = reference_model();
  TestFunction f = TestFunction::single(3);
  // second bump for the sampler criterion
  TestFunction f_alt{3, {Bump{2.0, (Vec(3) << 0.5, -0.3, 0.2).finished(), 0.8}}};
  std::vector<double> sweep{6.0, 8.0, 10.0, 12.0};
  AssemblyOptions assembly{};
  LimitOptions limit{};
  ContourOptions contour{};
  SamplerOptions sampler{};
  long draws = 10000;
  std::uint64_t seed = 20240601;

  // d = 3, beta = 1, L = 12, rho = 2 rho_c
  static ModelParams reference_model();
};

struct Check {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  std::string relation; // how measured compares to threshold, e.g. "<=", ">="
  bool passed = false;
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  double seconds = 0.0;
  std::string error; // set when the criterion threw

  bool passed() const;
  // one line: "criterion N PASS|FAIL title (seconds)"
  std::string summary() const;
};

constexpr int acceptance_criterion_count = 10;
const char* acceptance_title(int id);
CriterionResult run_criterion(int id, const AcceptanceConfig& config = {});

} // namespace becpf
