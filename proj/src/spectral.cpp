#include "becpf/spectral.hpp"

#include "becpf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace becpf {

using std::numbers::pi;

void ModelParams::validate() const {
  if (d < 3) throw PreconditionError("dimension must be at least 3, got " + std::to_string(d));
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  if (!(L > 0.0)) throw PreconditionError("L must be positive");
  if (rho && !(*rho > 0.0)) throw PreconditionError("rho must be positive");
  if (N && *N < 1) throw PreconditionError("N must be at least 1");
}

double ModelParams::volume() const { return std::pow(L, d); }

std::int64_t ModelParams::particle_count() const {
  if (N) return *N;
  if (!rho) throw PreconditionError("neither rho nor N is set");
  return std::max<std::int64_t>(1, std::llround(*rho * volume()));
}

double ModelParams::density() const {
  if (rho) return *rho;
  if (!N) throw PreconditionError("neither rho nor N is set");
  return static_cast<double>(*N) / volume();
}

ModelParams ModelParams::with_L(double side) const {
  ModelParams p = *this;
  p.L = side;
  if (!p.rho && N) p.rho = density();
  p.N.reset();
  return p;
}

double eigenvalue_g(const Eigen::Ref<const IVec>& k, const ModelParams& params) {
  const double q = 2.0 * pi / params.L;
  return std::exp(-params.beta * q * q * k.cast<double>().squaredNorm());
}

double a_nu(const Eigen::Ref<const Vec>& p, double z, int nu, double beta) {
  if (nu != 1 && nu != 2) throw PreconditionError("a_nu: nu must be 1 or 2");
  if (z < 0.0 || z > 1.0) throw PreconditionError("a_nu: z must lie in [0, 1]");
  const double e = std::exp(-beta * p.squaredNorm());
  const double zg = z * e;
  if (zg == 1.0) throw SingularInputError("a_nu: z exp(-beta p^2) = 1");
  // 1 - z e^{-beta p^2} without cancellation when z = 1
  const double denom = (z == 1.0) ? -std::expm1(-beta * p.squaredNorm()) : 1.0 - zg;
  return zg / std::pow(denom, nu);
}

IVec momentum_cell(const Eigen::Ref<const Vec>& p, double L) {
  IVec k(p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i)
    k(i) = static_cast<int>(std::ceil(p(i) * L / (2.0 * pi) - 0.5));
  return k;
}

double a_nu_lattice(const Eigen::Ref<const Vec>& p, double z, int nu, const ModelParams& params) {
  const IVec k = momentum_cell(p, params.L);
  if (k.isZero()) return 0.0;
  const Vec rep = (2.0 * pi / params.L) * k.cast<double>();
  return a_nu(rep, z, nu, params.beta);
}

namespace {

double sphere_area(int d) { return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d); }

} // namespace

double K_series(double r2, int d, double beta) {
  const double c = r2 / (4.0 * beta);
  const double h = 0.5 * d;
  const double pref = std::pow(4.0 * pi * beta, -h);
  const long n0 = std::max<long>(2000, static_cast<long>(std::ceil(10.0 * c)));
  auto f = [&](double t) { return pref * std::pow(t, -h) * std::exp(-c / t); };

  // tail first: integral from n0, plus Euler-Maclaurin corrections
  double integral = 0.0;
  {
    const double x = c / n0;
    double term = 1.0;
    for (int k = 0; k < 60; ++k) {
      const double add = term / (h + k - 1.0);
      integral += add;
      if (std::abs(add) < 1e-18 * std::abs(integral)) break;
      term *= -x / (k + 1);
    }
    integral *= pref * std::pow(static_cast<double>(n0), 1.0 - h);
  }
  const double fn = f(static_cast<double>(n0));
  const double dfn = fn * (-h / n0 + c / (static_cast<double>(n0) * n0));
  double sum = integral + 0.5 * fn - dfn / 12.0;
  for (long n = n0 - 1; n >= 1; --n) sum += f(static_cast<double>(n));
  return sum;
}

double critical_density(int d, double beta) {
  if (d < 3) throw PreconditionError("critical density requires d >= 3");
  if (!(beta > 0.0)) throw PreconditionError("beta must be positive");
  return K_series(0.0, d, beta);
}

double critical_density_momentum(int d, double beta) {
  if (d < 3) throw PreconditionError("critical density requires d >= 3");
  auto integrand = [&](double p) {
    if (p == 0.0) return d == 3 ? 1.0 / beta : 0.0;
    const double x = beta * p * p;
    return std::pow(p, d - 1) * std::exp(-x) / -std::expm1(-x);
  };
  const double cut = std::sqrt(50.0 / beta);
  const double head = integrate(integrand, 0.0, cut, 1e-14).value;
  const double tail = integrate_to_infinity(integrand, cut, 1e-10, 1e-300).value;
  return sphere_area(d) * std::pow(2.0 * pi, -d) * (head + tail);
}

double ell_bound(const ModelParams& params) {
  params.validate();
  const int d = params.d;
  if (params.L < pi * std::sqrt(params.beta))
    throw PreconditionError("ell_bound requires L >= pi sqrt(beta)");
  const double bp = 4.0 * params.beta / std::pow(2.0 + std::sqrt(static_cast<double>(d)), 2);
  const double q0 = pi * std::sqrt(bp) / params.L;
  auto integrand = [&](double q) {
    const double x = q * q;
    const double den = -std::expm1(-x);
    return std::pow(q, d - 1) * std::exp(-x) / (den * den);
  };
  const double cut = std::max(q0, 7.0);
  double I = integrate_to_infinity(integrand, cut, 1e-10, 1e-300).value;
  // split the near-singular head at geometric breakpoints
  for (double a = q0; a < cut;) {
    const double b = std::min(cut, 2.0 * a);
    I += integrate(integrand, a, b, 1e-13).value;
    a = b;
  }
  return std::pow(params.L / (2.0 * pi * std::sqrt(bp)), d) * sphere_area(d) * I;
}

double heat_kernel_free(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                        const ModelParams& params) {
  const double b = params.beta;
  return std::pow(4.0 * pi * b, -0.5 * params.d) * std::exp(-(x - y).squaredNorm() / (4.0 * b));
}

namespace {

double wrap(double delta, double L) { return delta - L * std::nearbyint(delta / L); }

double theta_images(double delta, double L, double beta) {
  const double dl = wrap(delta, L);
  const int m = static_cast<int>(std::ceil(std::sqrt(4.0 * beta * 40.0) / L)) + 1;
  double s = 0.0;
  for (int j = m; j >= 1; --j) {
    const double a = dl + j * L, b = dl - j * L;
    s += std::exp(-a * a / (4.0 * beta)) + std::exp(-b * b / (4.0 * beta));
  }
  s += std::exp(-dl * dl / (4.0 * beta));
  return s / std::sqrt(4.0 * pi * beta);
}

double theta_modes(double delta, double L, double beta) {
  const double q = 2.0 * pi / L;
  const int kmax = static_cast<int>(std::ceil(std::sqrt(40.0 / beta) / q)) + 1;
  double s = 0.0;
  for (int k = kmax; k >= 1; --k)
    s += 2.0 * std::exp(-beta * q * q * k * k) * std::cos(q * k * delta);
  return (1.0 + s) / L;
}

} // namespace

double heat_kernel_torus_1d(double delta, double L, double beta) { return theta_images(delta, L, beta); }

double heat_kernel_torus(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                         const ModelParams& params) {
  double v = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) v *= theta_images(x(i) - y(i), params.L, params.beta);
  return v;
}

double heat_kernel_torus_modes(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                               const ModelParams& params) {
  double v = 1.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) v *= theta_modes(x(i) - y(i), params.L, params.beta);
  return v;
}

double K_kernel(const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y,
                const ModelParams& params) {
  return K_series((x - y).squaredNorm(), params.d, params.beta);
}

double K_momentum(double r, int d, double beta) {
  const double nu = 0.5 * d - 1.0;
  const double pmax = std::sqrt(60.0 / beta);
  if (r == 0.0) return critical_density_momentum(d, beta);
  auto integrand = [&](double p) {
    if (p == 0.0) return 0.0;
    const double x = beta * p * p;
    const double a1 = std::exp(-x) / -std::expm1(-x);
    return std::pow(p, 0.5 * d) * std::cyl_bessel_j(nu, p * r) * a1;
  };
  // panels of one oscillation each keep the Kronrod estimate honest
  const double step = std::min(pmax, pi / r);
  double s = 0.0;
  for (double a = 0.0; a < pmax; a += step) s += integrate(integrand, a, std::min(pmax, a + step), 1e-13, 1e-18).value;
  return std::pow(2.0 * pi, -0.5 * d) * std::pow(r, -nu) * s;
}

KernelTable::KernelTable(int d, double beta, double r2_max)
    : d_(d), beta_(beta),
      cheb_([d, beta](double u) { return K_series(std::max(u, 0.0), d, beta); }, 0.0,
            std::max(r2_max, 1e-3), 1e-14) {}

double KernelTable::operator()(double r2) const {
  if (r2 > cheb_.upper()) return K_series(r2, d_, beta_);
  return cheb_(r2);
}

LatticeSpectrum::LatticeSpectrum(const ModelParams& params, int kmax, IMat modes)
    : params_(params), kmax_(kmax) {
  const int d = params.d;
  const Eigen::Index n = modes.cols();
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXi norm2 = modes.colwise().squaredNorm().transpose();
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (norm2(a) != norm2(b)) return norm2(a) < norm2(b);
    for (int i = 0; i < d; ++i)
      if (modes(i, a) != modes(i, b)) return modes(i, a) < modes(i, b);
    return false;
  });
  modes_.resize(d, n);
  g_.resize(n);
  const double q = 2.0 * pi / params.L;
  for (Eigen::Index j = 0; j < n; ++j) {
    modes_.col(j) = modes.col(order[j]);
    const long n2 = norm2(order[j]);
    g_(j) = std::exp(-params.beta * q * q * static_cast<double>(n2));
    if (shells_.empty() || shells_.back().norm2 != n2)
      shells_.push_back({n2, g_(j), static_cast<int>(j), 0});
    ++shells_.back().multiplicity;
  }
  diagonal_.values.resize(shells_.size());
  diagonal_.multiplicity.resize(shells_.size());
  for (std::size_t s = 0; s < shells_.size(); ++s) {
    diagonal_.values(s) = shells_[s].g;
    diagonal_.multiplicity(s) = shells_[s].multiplicity;
  }
}

namespace {

IMat enumerate_cube(int d, int kmax, long norm2_max) {
  std::vector<int> cols;
  IVec k = IVec::Constant(d, -kmax);
  const int side = 2 * kmax + 1;
  long total = 1;
  for (int i = 0; i < d; ++i) total *= side;
  for (long idx = 0; idx < total; ++idx) {
    if (k.squaredNorm() <= norm2_max) cols.insert(cols.end(), k.data(), k.data() + d);
    for (int i = 0; i < d; ++i) {
      if (++k(i) <= kmax) break;
      k(i) = -kmax;
    }
  }
  return Eigen::Map<IMat>(cols.data(), d, static_cast<Eigen::Index>(cols.size() / d));
}

} // namespace

LatticeSpectrum LatticeSpectrum::complete(const ModelParams& params, double drop_tol) {
  params.validate();
  const double q2 = std::pow(2.0 * pi / params.L, 2) * params.beta;
  // g_k >= drop_tol g_1  <=>  |k|^2 <= 1 - log(drop_tol) / (beta q^2)
  const long n2max = static_cast<long>(std::floor(1.0 - std::log(drop_tol) / q2));
  const int kmax = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n2max))));
  return LatticeSpectrum(params, kmax, enumerate_cube(params.d, kmax, n2max));
}

LatticeSpectrum LatticeSpectrum::cube(const ModelParams& params, int kmax) {
  params.validate();
  if (kmax < 0) throw PreconditionError("kmax must be non-negative");
  return LatticeSpectrum(params, kmax,
                         enumerate_cube(params.d, kmax, static_cast<long>(params.d) * kmax * kmax));
}

double LatticeSpectrum::excited_sum(double z, int nu) const {
  double s = 0.0;
  for (std::size_t j = shells_.size(); j-- > 1;) {
    const double zg = z * shells_[j].g;
    s += shells_[j].multiplicity * zg / std::pow(1.0 - zg, nu);
  }
  return s;
}

} // namespace becpf
