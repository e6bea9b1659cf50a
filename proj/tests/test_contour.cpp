#include "becpf/contour.hpp"
#include "becpf/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

using namespace becpf;

namespace {

double naive_permanent(const Mat& A) {
  std::vector<int> perm(static_cast<std::size_t>(A.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double total = 0.0;
  do {
    double prod = 1.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i) prod *= A(i, perm[static_cast<std::size_t>(i)]);
    total += prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

// sum over monomials of total degree N
double monomial_sum(const Vec& g, int N, Eigen::Index from = 0) {
  if (N == 0) return 1.0;
  if (from == g.size()) return 0.0;
  double s = 0.0, pw = 1.0;
  for (int e = 0; e <= N; ++e) {
    s += pw * monomial_sum(g, N - e, from + 1);
    pw *= g(from);
  }
  return s;
}

LogIntegrand inverse_det(const Vec& g) {
  return [g](Complex z) {
    Complex s = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) s -= std::log(1.0 - z * g(j));
    return s;
  };
}

} // namespace

TEST_CASE("Ryser permanent") {
  CHECK(permanent_ryser(Mat::Constant(1, 1, 2.5)) == 2.5);
  const Mat A2 = (Mat(2, 2) << 1.0, 2.0, 3.0, 4.0).finished();
  CHECK(permanent_ryser(A2) == doctest::Approx(1.0 * 4.0 + 2.0 * 3.0).epsilon(1e-15));
  CHECK(permanent_ryser(Mat::Ones(4, 4)) == doctest::Approx(24.0).epsilon(1e-14));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    const Mat A = Mat::NullaryExpr(7, 7, [&] { return u(rng); });
    const double ref = naive_permanent(A);
    CHECK(std::abs(permanent_ryser(A) - ref) <= 1e-12 * std::max(1.0, std::abs(ref)));
  }
  // Gram matrices have non-negative permanents
  for (int t = 0; t < 10; ++t) {
    const Mat B = Mat::NullaryExpr(6, 4, [&] { return u(rng); });
    CHECK(permanent_ryser(Mat(B * B.transpose())) >= 0.0);
  }
  const CMat C = (CMat(2, 2) << Complex(1, 1), Complex(0, 2), Complex(3, 0), Complex(1, -1)).finished();
  CHECK(std::abs(permanent_ryser(C) - (C(0, 0) * C(1, 1) + C(0, 1) * C(1, 0))) < 1e-14);
  CHECK_THROWS_AS(permanent_ryser(Mat::Ones(15, 15)), PreconditionError);
}

TEST_CASE("complete homogeneous symmetric polynomial") {
  CHECK(log_h_N_symmetric((Vec(1) << 0.3).finished(), 7) == doctest::Approx(7 * std::log(0.3)).epsilon(1e-14));
  for (int N : {1, 4, 100}) CHECK(std::exp(log_h_N_symmetric(Vec::Ones(2), N)) == doctest::Approx(N + 1.0).epsilon(1e-13));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    const Vec g = Vec::NullaryExpr(6, [&] { return u(rng); });
    CHECK(std::exp(log_h_N_symmetric(g, 5)) == doctest::Approx(monomial_sum(g, 5)).epsilon(1e-12));
  }
  // multiplicities
  const DiagonalSpectrum s{(Vec(2) << 0.5, 0.2).finished(), (Vec(2) << 2.0, 1.0).finished()};
  CHECK(log_h_N_symmetric(s, 6) == doctest::Approx(log_h_N_symmetric((Vec(3) << 0.5, 0.5, 0.2).finished(), 6)).epsilon(1e-14));
}

TEST_CASE("contour coefficients reproduce h_N") {
  const Vec g = (Vec(3) << 0.9, 0.4, 0.1).finished();
  const ContourResult first = contour_coefficient(inverse_det(g), ContourSpec{{0, 0}, 0.5, 64}, 1);
  CHECK(first.coefficient.value().real() == doctest::Approx(g.sum()).epsilon(1e-13));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 4; ++t) {
    const Vec ev = Vec::NullaryExpr(6, [&] { return u(rng); });
    for (int N : {1, 5, 20, 50}) {
      const double z = solve_z0(DiagonalSpectrum::simple(ev), N);
      const ContourResult c = contour_coefficient_adaptive(inverse_det(ev), ContourSpec{{0, 0}, z, default_contour_nodes(N)}, N);
      CHECK(std::abs(c.coefficient.log_real() - log_h_N_symmetric(ev, N)) < 1e-10);
      CHECK(c.coefficient.imag_ratio() < 1e-10);
    }
  }
  // fixed rules: 256 vs 512 nodes
  const Vec ev = (Vec(4) << 0.7, 0.5, 0.3, 0.2).finished();
  const ContourResult a = contour_coefficient(inverse_det(ev), ContourSpec{{0, 0}, 0.9, 256}, 10);
  const ContourResult b = contour_coefficient(inverse_det(ev), ContourSpec{{0, 0}, 0.9, 512}, 10);
  CHECK(std::abs(a.coefficient.value().real() / b.coefficient.value().real() - 1.0) < 1e-12);
  CHECK_THROWS_AS(contour_coefficient(inverse_det(ev), ContourSpec{{0, 0}, 0.9, 7}, 10), PreconditionError);

  // pole factoring on a spectrum with a dominant eigenvalue
  const Vec sharp = (Vec(3) << 0.999, 0.4, 0.1).finished();
  const double zs = solve_z0(DiagonalSpectrum::simple(sharp), 40);
  const Vec scaled = zs * sharp;
  const double p = scaled(0) / (1 - scaled(0));
  const LogIntegrand rest = [&](Complex eta) {
    Complex s = 0.0;
    for (int j = 1; j < 3; ++j) s -= std::log(1.0 - (eta - 1.0) * scaled(j) / (1 - scaled(j)));
    return s;
  };
  const ContourResult fac = contour_coefficient_factored(rest, p, ContourSpec{{0, 0}, 1.0, 64}, 40);
  const Vec occupations = (scaled.array() / (1 - scaled.array())).matrix();
  // [eta^40] prod_j (1 - p_j (eta - 1))^{-1} = h_40(p_j / (1 + p_j)) / prod_j (1 + p_j)
  const double expected = log_h_N_symmetric(Vec((occupations.array() / (1 + occupations.array())).matrix()), 40) -
                          occupations.array().log1p().sum();
  CHECK(fac.coefficient.log_real() == doctest::Approx(expected).epsilon(1e-11));

  // off-centre circle enclosing the origin
  const ContourResult shifted = contour_coefficient(inverse_det(ev), ContourSpec{{0.1, 0.05}, 0.8, 512}, 6);
  CHECK(shifted.coefficient.value().real() == doctest::Approx(std::exp(log_h_N_symmetric(ev, 6))).epsilon(1e-11));
}

TEST_CASE("finite Laplace functional on a discrete kernel") {
  // three weighted points, G = sqrt(w) J sqrt(w)
  const Vec w = (Vec(3) << 0.5, 0.3, 0.2).finished();
  const Mat J = (Mat(3, 3) << 1.0, 0.6, 0.3, 0.6, 1.2, 0.5, 0.3, 0.5, 0.9).finished();
  const Vec f = (Vec(3) << 0.7, 0.0, 1.5).finished();
  const Mat G = w.cwiseSqrt().asDiagonal() * J * w.cwiseSqrt().asDiagonal();
  const Vec ef = (-f).array().exp();
  const Mat Gt = (w.array() * ef.array()).sqrt().matrix().asDiagonal() * J *
                 (w.array() * ef.array()).sqrt().matrix().asDiagonal();
  const DiagonalSpectrum plain = DiagonalSpectrum::simple(Eigen::SelfAdjointEigenSolver<Mat>(G).eigenvalues());
  const DiagonalSpectrum deformed = DiagonalSpectrum::simple(Eigen::SelfAdjointEigenSolver<Mat>(Gt).eigenvalues());

  for (int N = 1; N <= 3; ++N) {
    // sum over all N-tuples of points of per(J) weighted by w (and e^{-f})
    double num = 0.0, den = 0.0;
    std::vector<int> idx(static_cast<std::size_t>(N), 0);
    const int tuples = static_cast<int>(std::pow(3, N));
    for (int t = 0; t < tuples; ++t) {
      int rem = t;
      for (int i = 0; i < N; ++i) {
        idx[static_cast<std::size_t>(i)] = rem % 3;
        rem /= 3;
      }
      Mat A(N, N);
      double weight = 1.0, damp = 1.0;
      for (int i = 0; i < N; ++i) {
        weight *= w(idx[static_cast<std::size_t>(i)]);
        damp *= ef(idx[static_cast<std::size_t>(i)]);
        for (int j = 0; j < N; ++j) A(i, j) = J(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      const double per = permanent_ryser(A);
      den += weight * per;
      num += weight * damp * per;
    }
    const FiniteLaplaceResult r = finite_laplace(plain, deformed, N);
    CHECK(r.value == doctest::Approx(num / den).epsilon(1e-8));
    CHECK(r.value <= 1.0);
  }
  const FiniteLaplaceResult same = finite_laplace(plain, plain, 3);
  CHECK(same.value == 1.0);
}

TEST_CASE("finite Laplace functional on the torus") {
  ModelParams p;
  p.L = 6.0;
  p.rho = 2.0 * critical_density(3, 1.0);
  const auto spec = std::make_shared<const LatticeSpectrum>(LatticeSpectrum::complete(p));
  const std::int64_t N = p.particle_count();
  CHECK(finite_laplace(assemble_deformation(TestFunction::zero(3), spec), N).value == 1.0);

  double prev = 1.0;
  for (double a : {0.5, 1.0, 2.0}) {
    const auto def = assemble_deformation(TestFunction::single(3, a, 1.0), spec);
    const FiniteLaplaceResult r = finite_laplace(def, N);
    CHECK(r.value < prev);
    CHECK(r.value > 0.0);
    CHECK(r.imag_residue < 1e-10);
    prev = r.value;
  }
  // factoring the condensate pole out of the integrand does not change the value
  const auto def = assemble_deformation(TestFunction::single(3), spec);
  ContourOptions direct;
  direct.factor_top_pole = false;
  const FiniteLaplaceResult a = finite_laplace(def, N), b = finite_laplace(def, N, direct);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-10));
  CHECK(a.nodes_deformed < b.nodes_deformed);
}

TEST_CASE("appendix inequalities") {
  CHECK(verify_lemma_A1(0.0, 3.0).middle == 1.0);
  CHECK(verify_lemma_A1(0.0, 3.0).lower == 1.0);
  const LemmaA1Check zero_p = verify_lemma_A1(0.4, 0.0);
  CHECK(zero_p.middle == 1.0);
  CHECK(zero_p.lower == 1.0);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 10000; ++t) {
    const double x = u(rng);
    const double p = 0.999 * u(rng) / x;
    CHECK(verify_lemma_A1(x, p).holds);
  }
  CHECK_THROWS_AS(verify_lemma_A1(0.5, 2.0), PreconditionError);

  // single mode: closed form N/(N+1) (1 - 1/(N+1))^N
  for (std::int64_t N : {10, 1000}) {
    const LemmaA2Result r = verify_lemma_A2(DiagonalSpectrum::simple(Vec::Constant(1, double(N))), N);
    const double n = double(N);
    CHECK(r.value == doctest::Approx(n / (n + 1) * std::pow(n / (n + 1), n)).epsilon(1e-10));
    CHECK(r.I1 == doctest::Approx(std::pow(1 + 1 / n, -n - 1)).epsilon(1e-12));
    CHECK(r.value == doctest::Approx(r.I1 + r.I2).epsilon(1e-9));
  }
  const LemmaA2Result big = verify_lemma_A2(DiagonalSpectrum::simple(Vec::Constant(1, 1000.0)), 1000);
  CHECK(std::abs(big.value * std::exp(1.0) - 1.0) < 0.02);
  CHECK(std::abs(big.I1 * std::exp(1.0) - 1.0) < 0.01);
  CHECK(big.radius_ok);
}
