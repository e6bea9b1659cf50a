#pragma once

#include "becpf/assembly.hpp"
#include "becpf/spectral.hpp"

#include <cstdint>

namespace becpf {

struct FugacityPair {
  double z0 = 0.0;
  double ztilde0 = 0.0;
  std::int64_t N = 0;
  double residual0 = 0.0;     // Tr[z0 G (1 - z0 G)^{-1}] - N
  double residual_tilde = 0.0; // same for G~ at ztilde0
  double gtilde0 = 1.0;
};

// Root of Tr[z G (1 - z G)^{-1}] = N on (0, 1 / max g).
double solve_z0(const DiagonalSpectrum& spectrum, double N);
double solve_z0(const LatticeSpectrum& spectrum, double N);
// Root of the deformed equation on (0, 1 / g~_0 - 1e-13).
double solve_ztilde0(const LowRankDeformation& def, double N, const TopEigenpair& top);
FugacityPair solve_fugacities(const LowRankDeformation& def, std::int64_t N, const TopEigenpair& top);
FugacityPair solve_fugacities(const LowRankDeformation& def, std::int64_t N);

// z g_j / (1 - z g_j) over all modes, sorted descending.
Vec occupation_numbers(const DiagonalSpectrum& spectrum, double z);
Vec occupation_numbers(const LatticeSpectrum& spectrum, double z);

} // namespace becpf
