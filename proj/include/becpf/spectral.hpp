#pragma once

#include "becpf/quadrature.hpp"
#include "becpf/types.hpp"

#include <vector>

namespace becpf {

// exp(-beta |2 pi k / L|^2)
double eigenvalue_g(const Eigen::Ref<const IVec>& k, const ModelParams& params);

// z e^{-beta p^2} / (1 - z e^{-beta p^2})^nu, nu in {1, 2}
double a_nu(const Eigen::Ref<const Vec>& p, double z, int nu, double beta);
// Piecewise-constant lattice version: zero on the central cell, otherwise a_nu
// at the representative 2 pi k / L of the cell containing p.
double a_nu_lattice(const Eigen::Ref<const Vec>& p, double z, int nu, const ModelParams& params);
// Lattice index of the momentum cell containing p (cells are cubes of side
// 2 pi / L centred on 2 pi k / L).
IVec momentum_cell(const Eigen::Ref<const Vec>& p, double L);

// sum_{n >= 1} (4 pi beta n)^{-d/2}
double critical_density(int d, double beta);
// The same quantity as a radial momentum integral of a_1(p; 1).
double critical_density_momentum(int d, double beta);

// Computable bound for sum_{k != 0} g_k / (1 - g_k)^2 from the radial
// integral that dominates the lattice sum. Requires L >= pi sqrt(beta).
double ell_bound(const ModelParams& params);

double heat_kernel_free(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                        const ModelParams& params);
// Periodic heat kernel, image sum over translates (default route).
double heat_kernel_torus(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                         const ModelParams& params);
// One-dimensional periodic factor of the above (the kernel is a product over axes).
double heat_kernel_torus_1d(double delta, double L, double beta);
// Periodic heat kernel, Fourier mode sum.
double heat_kernel_torus_modes(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                               const ModelParams& params);

// K(r) = sum_{n >= 1} (4 pi beta n)^{-d/2} exp(-r^2 / (4 beta n)) as a function
// of r^2, summed with an Euler-Maclaurin tail.
double K_series(double r2, int d, double beta);
double K_kernel(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                const ModelParams& params);
// K through the oscillatory momentum integral of a_1(p; 1), for cross-checks.
double K_momentum(double r, int d, double beta);

// Chebyshev table of K as a function of r^2 on [0, r2_max]; K is entire in r^2
// so the table is accurate to near machine precision.
class KernelTable {
public:
  KernelTable(int d, double beta, double r2_max);
  double operator()(double r2) const;
  double r2_max() const { return cheb_.upper(); }

private:
  int d_;
  double beta_;
  Chebyshev cheb_;
};

// Distinct eigenvalues with multiplicities; the generic input for the
// determinant, trace and fugacity routines.
struct DiagonalSpectrum {
  Vec values;
  Vec multiplicity;

  static DiagonalSpectrum simple(const Vec& values) {
    return {values, Vec::Ones(values.size())};
  }
  Eigen::Index size() const { return values.size(); }
  double top() const { return values.size() ? values.maxCoeff() : 0.0; }
};

// Modes sharing |k|^2 share one eigenvalue.
struct Shell {
  long norm2 = 0;
  double g = 1.0;
  int first = 0;         // index of the first mode in LatticeSpectrum::modes
  int multiplicity = 0;
};

// Torus heat spectrum truncated to the modes with g_k >= drop_tol * g_1, or
// to the cube |k_i| <= kmax. Modes are sorted by |k|^2, ties lexicographic.
class LatticeSpectrum {
public:
  static constexpr double default_drop_tol = 1e-16;

  static LatticeSpectrum complete(const ModelParams& params, double drop_tol = default_drop_tol);
  static LatticeSpectrum cube(const ModelParams& params, int kmax);

  const ModelParams& params() const { return params_; }
  int kmax() const { return kmax_; }
  int size() const { return static_cast<int>(g_.size()); }
  const IMat& modes() const { return modes_; } // d x size
  const Vec& g() const { return g_; }
  const std::vector<Shell>& shells() const { return shells_; }
  // Largest eigenvalue below 1.
  double g1() const { return shells_.size() > 1 ? shells_[1].g : 0.0; }

  // Shell values and multiplicities; entry 0 is the zero mode.
  const DiagonalSpectrum& diagonal() const { return diagonal_; }
  // sum_{k != 0} z g_k / (1 - z g_k)^nu
  double excited_sum(double z, int nu) const;

private:
  LatticeSpectrum(const ModelParams& params, int kmax, IMat modes);
  ModelParams params_;
  int kmax_ = 0;
  IMat modes_;
  Vec g_;
  std::vector<Shell> shells_;
  DiagonalSpectrum diagonal_;
};

} // namespace becpf
