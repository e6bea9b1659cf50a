#include "becpf/errors.hpp"
#include "becpf/spectral.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace becpf;
using std::numbers::pi;

namespace {

ModelParams model(int d, double beta, double L) {
  ModelParams p;
  p.d = d;
  p.beta = beta;
  p.L = L;
  return p;
}

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }
IVec k3(int a, int b, int c) { return (IVec(3) << a, b, c).finished(); }

} // namespace

TEST_CASE("eigenvalue_g on small lattice vectors") {
  const ModelParams p = model(3, 1.0, 2 * pi);
  CHECK(eigenvalue_g(k3(0, 0, 0), p) == 1.0);
  CHECK(eigenvalue_g(k3(1, 0, 0), p) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(eigenvalue_g(k3(1, 1, 0), p) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
}

TEST_CASE("a_nu values and singular input") {
  const Vec p = v3(1, 0, 0);
  CHECK(a_nu(p, 0.0, 1, 1.0) == 0.0);
  CHECK(a_nu(p, 1.0, 1, 1.0) == doctest::Approx(0.5819767068693265).epsilon(1e-14));
  CHECK(a_nu(p, 1.0, 2, 1.0) == doctest::Approx(std::exp(-1.0) / std::pow(1 - std::exp(-1.0), 2)).epsilon(1e-14));
  CHECK_THROWS_AS(a_nu(Vec::Zero(3), 1.0, 1, 1.0), SingularInputError);
}

TEST_CASE("a_nu_lattice is piecewise constant and dominated") {
  const ModelParams p = model(3, 1.0, 2 * pi);
  CHECK(a_nu_lattice(v3(0.2, -0.3, 0.49), 1.0, 1, p) == 0.0);
  CHECK(a_nu_lattice(v3(1.2, 0.3, -0.2), 1.0, 1, p) == doctest::Approx(0.5819767068693265).epsilon(1e-14));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coord(-6.0, 6.0), zed(0.0, 1.0);
  const double shrink = 2.0 / (2.0 + std::sqrt(3.0));
  for (int nu = 1; nu <= 2; ++nu) {
    for (int t = 0; t < 1000; ++t) {
      const ModelParams q = model(3, 1.0, 3.0 + 10.0 * zed(rng));
      const Vec x = v3(coord(rng), coord(rng), coord(rng));
      if (momentum_cell(x, q.L).isZero()) continue;
      const double z = zed(rng);
      CHECK(a_nu_lattice(x, z, nu, q) <= a_nu(shrink * x, 1.0, nu, q.beta) * (1 + 1e-14));
    }
  }
}

TEST_CASE("critical density: series against an independent partial sum") {
  // direct sum to 10^6 plus the midpoint integral tail
  double oracle = 0.0;
  const long n = 1000000;
  for (long k = n; k >= 1; --k) oracle += std::pow(4 * pi * k, -1.5);
  oracle += std::pow(4 * pi, -1.5) * 2.0 / std::sqrt(n + 0.5);
  CHECK(critical_density(3, 1.0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(critical_density(3, 1.0) == doctest::Approx(5.8643e-2).epsilon(1e-4));
  CHECK(critical_density(4, 1.0) == doctest::Approx(1.0 / 96.0).epsilon(1e-13));
  for (double beta : {0.25, 2.0, 7.5})
    CHECK(critical_density(3, beta) == doctest::Approx(std::pow(beta, -1.5) * critical_density(3, 1.0)).epsilon(1e-13));
  for (int d : {3, 4, 5})
    CHECK(critical_density_momentum(d, 1.3) == doctest::Approx(critical_density(d, 1.3)).epsilon(1e-8));
}

TEST_CASE("ell_bound scaling and dominance") {
  const double r3 = ell_bound(model(3, 1.0, 800.0)) / ell_bound(model(3, 1.0, 400.0));
  CHECK(r3 == doctest::Approx(16.0).epsilon(0.01));
  const double r5 = ell_bound(model(5, 1.0, 800.0)) / ell_bound(model(5, 1.0, 400.0));
  CHECK(r5 == doctest::Approx(32.0).epsilon(0.01));
  for (double L : {6.0, 8.0, 10.0}) {
    const ModelParams p = model(3, 1.0, L);
    const double exact = LatticeSpectrum::complete(p).excited_sum(1.0, 2);
    CHECK(ell_bound(p) >= exact);
  }
  CHECK_THROWS_AS(ell_bound(model(3, 1.0, 3.0)), PreconditionError);
}

TEST_CASE("free heat kernel") {
  const ModelParams p = model(3, 1.0, 10.0);
  CHECK(heat_kernel_free(Vec::Zero(3), Vec::Zero(3), p) == doctest::Approx(std::pow(4 * pi, -1.5)).epsilon(1e-15));
  const Vec x = v3(0.3, -1.0, 2.0), y = v3(-0.5, 0.1, 0.7);
  CHECK(heat_kernel_free(x, y, p) == heat_kernel_free(y, x, p));
  const Rule1D gl = gauss_legendre(80, -14.0, 14.0);
  double total = 0.0;
  for (int i = 0; i < 80; ++i)
    for (int j = 0; j < 80; ++j)
      for (int k = 0; k < 80; ++k)
        total += gl.weights(i) * gl.weights(j) * gl.weights(k) *
                 heat_kernel_free(x, x + v3(gl.nodes(i), gl.nodes(j), gl.nodes(k)), p);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("torus heat kernel: images against modes, normalization, large box") {
  const ModelParams p = model(3, 1.0, 8.0);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int t = 0; t < 100; ++t) {
    const Vec x = v3(u(rng), u(rng), u(rng)), y = v3(u(rng), u(rng), u(rng));
    const double a = heat_kernel_torus(x, y, p), b = heat_kernel_torus_modes(x, y, p);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(a, 1e-3));
    CHECK(a >= heat_kernel_free(x, y, p));
  }
  const Rule1D gl = gauss_legendre(48, -4.0, 4.0);
  const Vec x = v3(1.0, -2.5, 0.3);
  double total = 0.0;
  for (int i = 0; i < 48; ++i)
    for (int j = 0; j < 48; ++j)
      for (int k = 0; k < 48; ++k)
        total += gl.weights(i) * gl.weights(j) * gl.weights(k) *
                 heat_kernel_torus(x, v3(gl.nodes(i), gl.nodes(j), gl.nodes(k)), p);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));

  const ModelParams big = model(3, 1.0, 20.0);
  for (int t = 0; t < 50; ++t) {
    Vec d = v3(u(rng), u(rng), u(rng));
    d *= 1.0 / std::max(1.0, d.norm());
    const Vec x0 = v3(u(rng), u(rng), u(rng));
    CHECK(std::abs(heat_kernel_torus(x0, x0 + d, big) - heat_kernel_free(x0, x0 + d, big)) < 1e-12);
  }
}

TEST_CASE("K kernel: diagonal, symmetry, momentum route, table") {
  const ModelParams p = model(3, 1.0, 10.0);
  const Vec x = v3(0.2, 0.4, -0.1);
  CHECK(K_kernel(x, x, p) == doctest::Approx(critical_density(3, 1.0)).epsilon(1e-15));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 20; ++t) {
    const Vec a = v3(u(rng), u(rng), u(rng)), b = v3(u(rng), u(rng), u(rng));
    CHECK(K_kernel(a, b, p) == K_kernel(b, a, p));
    CHECK(K_kernel(a, b, p) > 0.0);
  }
  CHECK(K_momentum(1.0, 3, 1.0) == doctest::Approx(K_series(1.0, 3, 1.0)).epsilon(1e-8));
  CHECK(K_momentum(2.5, 4, 0.7) == doctest::Approx(K_series(6.25, 4, 0.7)).epsilon(1e-8));

  const KernelTable table(3, 1.0, 16.0);
  for (double r2 = 0.0; r2 <= 16.0; r2 += 0.37)
    CHECK(table(r2) == doctest::Approx(K_series(r2, 3, 1.0)).epsilon(1e-13));
}

TEST_CASE("lattice spectrum: ordering, completeness, trace limit") {
  const ModelParams p = model(3, 1.0, 12.0);
  const LatticeSpectrum s = LatticeSpectrum::complete(p);
  CHECK(s.g()(0) == 1.0);
  CHECK(s.modes().col(0).isZero());
  CHECK(s.shells()[0].multiplicity == 1);
  for (int j = 1; j < s.size(); ++j) {
    CHECK(s.g()(j) <= s.g()(j - 1));
    CHECK(s.g()(j) > 0.0);
  }
  const double tol = LatticeSpectrum::default_drop_tol * s.g1();
  CHECK(s.g().minCoeff() >= tol);
  int count = 0;
  for (int a = -s.kmax() - 1; a <= s.kmax() + 1; ++a)
    for (int b = -s.kmax() - 1; b <= s.kmax() + 1; ++b)
      for (int c = -s.kmax() - 1; c <= s.kmax() + 1; ++c)
        if (eigenvalue_g(k3(a, b, c), p) >= tol) ++count;
  CHECK(count == s.size());

  const ModelParams q = model(3, 1.0, 20.0);
  const double trace = LatticeSpectrum::complete(q).g().sum() / q.volume();
  CHECK(std::abs(trace / std::pow(4 * pi, -1.5) - 1.0) < 0.01);
  CHECK(LatticeSpectrum::cube(p, 2).size() == 125);
}
