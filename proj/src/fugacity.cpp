#include "becpf/fugacity.hpp"

#include "becpf/errors.hpp"
#include "becpf/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

namespace becpf {

namespace {

// H is strictly increasing on (lo, hi) with H(lo) < N and H -> inf at hi.
// A fixed schedule (60 bisection steps, then secant steps on the final
// bracket) keeps the result bitwise reproducible.
double solve_increasing(const std::function<double(double)>& H, double N, double lo, double hi) {
  double hlo = H(lo), hhi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double h = H(mid);
    if (h < N) {
      lo = mid;
      hlo = h;
    } else {
      hi = mid;
      hhi = h;
    }
  }
  double best = (N - hlo <= hhi - N) ? lo : hi;
  for (int it = 0; it < 4 && std::isfinite(hhi) && hhi > hlo; ++it) {
    const double z = lo + (N - hlo) * (hi - lo) / (hhi - hlo);
    if (!(z > lo && z < hi)) break;
    const double h = H(z);
    best = z;
    if (h == N) break;
    if (h < N) {
      lo = z;
      hlo = h;
    } else {
      hi = z;
      hhi = h;
    }
  }
  return best;
}

} // namespace

double solve_z0(const DiagonalSpectrum& spectrum, double N) {
  if (!(N > 0.0)) throw PreconditionError("particle number must be positive");
  const double top = spectrum.top();
  if (!(top > 0.0)) throw PreconditionError("spectrum must have a positive eigenvalue");
  return solve_increasing([&](double z) { return trace_H(spectrum, z); }, N, 0.0, 1.0 / top);
}

double solve_z0(const LatticeSpectrum& spectrum, double N) { return solve_z0(spectrum.diagonal(), N); }

double solve_ztilde0(const LowRankDeformation& def, double N, const TopEigenpair& top) {
  if (!(N > 0.0)) throw PreconditionError("particle number must be positive");
  if (def.is_zero()) return solve_z0(def.spectrum(), N);
  return solve_increasing([&](double z) { return trace_H(def, z); }, N, 0.0, 1.0 / top.value - 1e-13);
}

FugacityPair solve_fugacities(const LowRankDeformation& def, std::int64_t N, const TopEigenpair& top) {
  FugacityPair fp;
  fp.N = N;
  fp.gtilde0 = top.value;
  const double n = static_cast<double>(N);
  fp.z0 = solve_z0(def.spectrum(), n);
  fp.ztilde0 = solve_ztilde0(def, n, top);
  fp.residual0 = trace_H(def.spectrum(), fp.z0) - n;
  fp.residual_tilde = trace_H(def, fp.ztilde0) - n;
  if (!(std::abs(fp.residual0) <= 1e-9 * n) || !(std::abs(fp.residual_tilde) <= 1e-9 * n))
    throw NumericalGuardError("fugacity residual above 1e-9 N (" + std::to_string(fp.residual0) + ", " +
                              std::to_string(fp.residual_tilde) + ")");
  return fp;
}

FugacityPair solve_fugacities(const LowRankDeformation& def, std::int64_t N) {
  return solve_fugacities(def, N, top_deformed_eigenpair(def));
}

Vec occupation_numbers(const DiagonalSpectrum& spectrum, double z) {
  const Eigen::Index total = static_cast<Eigen::Index>(spectrum.multiplicity.sum());
  Vec p(total);
  Eigen::Index at = 0;
  for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
    const double zg = z * spectrum.values(j);
    if (zg >= 1.0) throw SingularInputError("occupation numbers need z g < 1");
    const Eigen::Index m = static_cast<Eigen::Index>(spectrum.multiplicity(j));
    p.segment(at, m).setConstant(zg / (1.0 - zg));
    at += m;
  }
  std::sort(p.data(), p.data() + p.size(), std::greater<>());
  return p;
}

Vec occupation_numbers(const LatticeSpectrum& spectrum, double z) {
  return occupation_numbers(spectrum.diagonal(), z);
}

} // namespace becpf
