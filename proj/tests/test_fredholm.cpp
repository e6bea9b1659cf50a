#include "becpf/errors.hpp"
#include "becpf/fredholm.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace becpf;
using std::numbers::pi;

namespace {

ModelParams model(double L) {
  ModelParams p;
  p.d = 3;
  p.beta = 1.0;
  p.L = L;
  return p;
}

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

// log prod (1 - z lambda) from a dense Hermitian matrix
Complex dense_log_det(const CMat& A, Complex z) {
  const Vec lam = Eigen::SelfAdjointEigenSolver<CMat>(A, Eigen::EigenvaluesOnly).eigenvalues();
  Complex s = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i) s += std::log(1.0 - z * lam(i));
  return s;
}

double dense_trace_H(const CMat& A, double z) {
  const Vec lam = Eigen::SelfAdjointEigenSolver<CMat>(A, Eigen::EigenvaluesOnly).eigenvalues();
  return (z * lam.array() / (1.0 - z * lam.array())).sum();
}

// same determinant compared modulo 2 pi i
double log_distance(Complex a, Complex b) { return std::abs(std::exp(a - b) - 1.0); }

} // namespace

TEST_CASE("plain determinant and trace on simple spectra") {
  const DiagonalSpectrum one = DiagonalSpectrum::simple(Vec::Ones(1));
  CHECK(det_one_minus_zG(one, 0.0).log_abs == 0.0);
  CHECK(det_one_minus_zG(one, 0.5).value().real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(trace_H(one, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(det_one_minus_zG(one, 1.0), SingularInputError);

  const LatticeSpectrum s = LatticeSpectrum::complete(model(8.0));
  double prev = -1.0;
  for (double z = 0.05; z < 1.0; z += 0.05) {
    const double h = trace_H(s, z);
    CHECK(h > prev);
    prev = h;
  }
  // -d/dz log Det(1 - zG) = Tr[G (1 - zG)^{-1}] = H(z) / z
  for (double z : {0.3, 0.9, 0.99}) {
    const double e = 1e-6 * (1 - z);
    const double fd = -(det_one_minus_zG(s, z + e).log_abs - det_one_minus_zG(s, z - e).log_abs) / (2 * e);
    CHECK(fd == doctest::Approx(trace_H(s, z) / z).epsilon(1e-6));
  }
  // complex z: log-space bookkeeping matches the direct product on a short spectrum
  const DiagonalSpectrum few = DiagonalSpectrum::simple((Vec(4) << 0.9, 0.5, 0.25, 0.1).finished());
  const Complex z(0.3, 1.1);
  Complex direct = 1.0;
  for (int i = 0; i < 4; ++i) direct *= 1.0 - z * few.values(i);
  CHECK(std::abs(det_one_minus_zG(few, z).value() - direct) < 1e-14);
}

TEST_CASE("deformed determinant and trace against dense spectra") {
  const TestFunction f(3, {Bump{1.5, v3(0.4, 0.1, -0.3), 1.2}});
  const ModelParams p = model(6.0);
  const auto spec = std::make_shared<const LatticeSpectrum>(LatticeSpectrum::cube(p, 4));
  const auto def = assemble_deformation(f, spec);
  const CMat dense = def.dense_matrix();
  const CMat excited = dense.bottomRightCorner(dense.rows() - 1, dense.cols() - 1);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> angle(0.0, 2 * pi);
  for (int t = 0; t < 10; ++t) {
    const Complex z = std::polar(0.9, angle(rng));
    CHECK(log_distance(det_one_minus_zGtilde(def, z).log(), dense_log_det(dense, z)) < 1e-8);
    CHECK(log_distance(det_one_minus_zGtilde(def, z, Sector::excited).log(), dense_log_det(excited, z)) < 1e-8);
  }
  for (double z : {0.3, 0.95, 1.0, 1.002}) {
    CHECK(trace_H(def, z) == doctest::Approx(dense_trace_H(dense, z)).epsilon(1e-8));
    CHECK(trace_H(def, z, Sector::excited) == doctest::Approx(dense_trace_H(excited, z)).epsilon(1e-8));
  }
  for (double z : {0.2, 0.7, 0.99}) {
    const DetResult d = det_one_minus_zGtilde(def, z);
    CHECK(std::abs(d.phase - Complex(1.0, 0.0)) < 1e-14);
    const double e = 1e-6;
    const double fd = -(det_one_minus_zGtilde(def, z + e).log_abs - det_one_minus_zGtilde(def, z - e).log_abs) / (2 * e);
    CHECK(z * fd == doctest::Approx(trace_H(def, z)).epsilon(1e-6));
  }
}

TEST_CASE("zero deformation reduces to the plain operator") {
  const ModelParams p = model(6.0);
  const auto def = assemble_deformation(TestFunction::zero(3), p);
  for (Complex z : {Complex(0.5, 0.2), Complex(-0.7, 0.1), Complex(0.95, 0.0)}) {
    CHECK(log_distance(det_one_minus_zGtilde(def, z).log(), det_one_minus_zG(def.spectrum(), z).log()) < 1e-14);
  }
  CHECK(trace_H(def, 0.9) == doctest::Approx(trace_H(def.spectrum(), 0.9)).epsilon(1e-14));
}

TEST_CASE("Det(1 + K_f) and the condensate quadratic form") {
  const ModelParams p = model(10.0);
  const NystromKernel zero = assemble_nystrom_Kf(TestFunction::zero(3), p);
  CHECK(det_one_plus_Kf(zero).value().real() == 1.0);
  CHECK(condensate_quadratic_form(zero) == 0.0);

  const TestFunction f = TestFunction::single(3);
  const double norm = f.one_minus_exp_norm();
  const NystromKernel K = assemble_nystrom_Kf(f, p);
  const NystromKernel K2 = assemble_nystrom_Kf(f, p, BallOrder{13, 12, 26});
  const double det = det_one_plus_Kf(K).value().real(), det2 = det_one_plus_Kf(K2).value().real();
  CHECK(std::abs(det / det2 - 1.0) < 1e-7);
  CHECK(det >= 1.0 + K.M.trace() - 1e-12);

  // the eigenvalue product agrees with the Cholesky route
  const Vec lam = Eigen::SelfAdjointEigenSolver<Mat>(K.M, Eigen::EigenvaluesOnly).eigenvalues();
  CHECK(det_one_plus_Kf(K).log_abs == doctest::Approx(lam.array().log1p().sum()).epsilon(1e-12));

  const double rhoc = critical_density(3, 1.0);
  const double qf = condensate_quadratic_form(K);
  CHECK(qf <= norm);
  CHECK(qf >= norm / (1 + rhoc * norm) * 0.95);
  CHECK(qf == doctest::Approx(condensate_quadratic_form(K2)).epsilon(1e-9));
}

TEST_CASE("resolvent positivity on boxes") {
  const ModelParams p = model(10.0);
  const Box tiny{v3(0, 0, 0), v3(1e-3, 1e-3, 1e-3)};
  const PositivityReport t = positivity_suite(tiny, p, 3);
  CHECK(t.passed());
  CHECK(t.resolvent_norm < 1e-9);

  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> side(0.2, 4.0), corner(-3.0, 3.0);
  std::uniform_int_distribution<int> nodes(3, 8);
  for (int b = 0; b < 20; ++b) {
    const Vec lo = v3(corner(rng), corner(rng), corner(rng));
    const Box box{lo, lo + v3(side(rng), side(rng), side(rng))};
    const PositivityReport r = positivity_suite(box, p, nodes(rng));
    CHECK(r.norm_ok());
    CHECK(r.kernel_ok());
    CHECK(r.indicator_ok());
    CHECK(r.resolvent_norm == doctest::Approx(r.lambda_max / (1 + r.lambda_max)).epsilon(1e-15));
  }
}
