#pragma once

#include "becpf/assembly.hpp"
#include "becpf/fredholm.hpp"
#include "becpf/fugacity.hpp"
#include "becpf/types.hpp"

#include <functional>

namespace becpf {

// Permanent by Ryser's formula with Gray-code row-sum updates. n <= 14.
double permanent_ryser(const Eigen::Ref<const Mat>& A);
Complex permanent_ryser(const Eigen::Ref<const CMat>& A);

// log h_N(g) for the complete homogeneous symmetric polynomial of the
// eigenvalues g (with multiplicities). -inf when h_N = 0.
double log_h_N_symmetric(const DiagonalSpectrum& spectrum, int N);
double log_h_N_symmetric(const Vec& eigenvalues, int N);

struct ContourSpec {
  Complex center{0.0, 0.0};
  double radius = 1.0;
  int nodes = 512;
};

// A complex number stored as exp(shift) * scaled, so sums of terms of wildly
// different magnitude never leave floating-point range.
struct ScaledComplex {
  double shift = -std::numeric_limits<double>::infinity();
  Complex scaled{0.0, 0.0};

  ScaledComplex& operator+=(const ScaledComplex& o);
  Complex value() const { return std::exp(shift) * scaled; }
  double log_abs() const { return shift + std::log(std::abs(scaled)); }
  // log of the real part; requires a positive real part
  double log_real() const;
  double imag_ratio() const { return std::abs(scaled.imag()) / std::abs(scaled); }
};

struct ContourResult {
  ScaledComplex coefficient;
  int nodes = 0;
  double last_change = 0.0; // relative change at the final doubling (0 if none)
};

// log F(z) for an integrand F analytic on and inside the contour (apart from
// the pole at the origin handled by the z^{-N-1} factor).
using LogIntegrand = std::function<Complex(Complex)>;

// (1/2 pi i) \oint F(z) z^{-N-1} dz by the M-point trapezoidal rule.
ContourResult contour_coefficient(const LogIntegrand& log_f, const ContourSpec& spec, int N);
// Doubles the node count (reusing evaluated nodes) until two successive
// values agree to rel_tol.
ContourResult contour_coefficient_adaptive(const LogIntegrand& log_f, const ContourSpec& spec, int N,
                                           double rel_tol = 1e-11, int max_nodes = 1 << 17);

// Coefficient of z^N in F_rest(z) / (1 - p (z - 1)), p > 0. The pole at
// 1 + 1/p enters through the truncated series sum_{k<=N} a_k z^k of its
// factor, so the trapezoidal rule only has to resolve F_rest.
ContourResult contour_coefficient_factored(const LogIntegrand& log_rest, double p, const ContourSpec& spec, int N,
                                           double rel_tol = 1e-11, int max_nodes = 1 << 17);

// Node schedule for N particles: max(512, 8 sqrt N), rounded up to even.
int default_contour_nodes(int N);

struct FiniteLaplaceResult {
  double value = 1.0;
  double log_value = 0.0;
  double z0 = 0.0;
  double ztilde0 = 0.0;
  std::int64_t N = 0;
  double log_fugacity_factor = 0.0; // N log(z0 / z~0)
  double log_det_ratio = 0.0;       // log Det(1 - z0 G) - log Det(1 - z~0 G~)
  double log_contour_plain = 0.0;   // log I
  double log_contour_deformed = 0.0; // log I~
  double imag_residue = 0.0;        // largest |Im| / |.| of the two contour sums
  int nodes_plain = 0;
  int nodes_deformed = 0;
};

struct ContourOptions {
  double rel_tol = 1e-11;
  int max_nodes = 1 << 17;
  int min_nodes = 0; // 0: default_contour_nodes(N), or 128 when the top pole is factored
  bool factor_top_pole = true;
};

// E[exp(-<f, xi>)] for N bosons with one-particle operators G (plain) and
// G~ = G^{1/2} e^{-f} G^{1/2} (deformed), each given by its spectrum.
FiniteLaplaceResult finite_laplace(const DiagonalSpectrum& plain, const DiagonalSpectrum& deformed, std::int64_t N,
                                   const ContourOptions& options = {});
// Torus version; the deformed determinant goes through the low-rank update.
FiniteLaplaceResult finite_laplace(const LowRankDeformation& def, std::int64_t N, const FugacityPair& fp,
                                   const ContourOptions& options = {});
FiniteLaplaceResult finite_laplace(const LowRankDeformation& def, std::int64_t N, const ContourOptions& options = {});

// 1 >= (1 + x)^p (1 - p x) >= exp(-p (1 + p)(1 + p x^2) x^2 / (2 (1 - p x)^2))
struct LemmaA1Check {
  double middle = 1.0;
  double lower = 1.0;
  bool holds = true;
};
LemmaA1Check verify_lemma_A1(double x, double p, double slack = 1e-14);

struct LemmaA2Result {
  double value = 0.0; // p0 * \oint_{S_1(0)} eta^{-N-1} prod_j (1 - p_j (eta - 1))^{-1} d eta / 2 pi i
  double I1 = 0.0;    // residue at eta = 1 + 1/p0 (times p0)
  double I2 = 0.0;    // the same integral on |eta| = 1 + R/p0 (times p0)
  double imag_residue = 0.0;
  double p0 = 0.0, p1 = 0.0, R = 0.0, c = 0.5;
  double second_moment_ratio = 0.0; // R^2 sum_{j>=1} p_j (1 + p_j) / p0^2
  double growth_ratio = 0.0;        // p0 / (R e^{c' R}), c' = log(1 + c) / c
  bool radius_ok = false;           // 1 < R < c p0 min(1, 1/p1)
  int nodes = 0;
};

// Occupations p_j (values with multiplicities) summing to the integer N.
// R defaults to sqrt(p0) when not positive.
LemmaA2Result verify_lemma_A2(const DiagonalSpectrum& occupations, std::int64_t N, double R = 0.0,
                              double c = 0.5, const ContourOptions& options = {});
// Torus occupations p_j = z0 g_j / (1 - z0 g_j) with R = L^{(d-2)/2}.
LemmaA2Result verify_lemma_A2(const LatticeSpectrum& spectrum, std::int64_t N, const ContourOptions& options = {});

} // namespace becpf
