#include "becpf/contour.hpp"

#include "becpf/errors.hpp"
#include "becpf/quadrature.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <string>
#include <vector>

namespace becpf {

namespace {

template <class Scalar, class Matrix>
Scalar ryser(const Matrix& A) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw PreconditionError("permanent needs a square matrix");
  if (n > 14) throw PreconditionError("permanent_ryser is capped at n = 14");
  if (n == 0) return Scalar(1.0);
  std::vector<Scalar> rows(static_cast<std::size_t>(n), Scalar(0.0));
  Scalar total(0.0);
  const std::uint32_t subsets = 1u << n;
  std::uint32_t gray = 0;
  for (std::uint32_t k = 1; k < subsets; ++k) {
    const int j = std::countr_zero(k);
    gray ^= 1u << j;
    const double sign = (gray >> j) & 1u ? 1.0 : -1.0;
    Scalar prod(1.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      rows[static_cast<std::size_t>(i)] += sign * A(i, j);
      prod *= rows[static_cast<std::size_t>(i)];
    }
    total += (std::popcount(gray) % 2 ? -1.0 : 1.0) * prod;
  }
  return (n % 2 ? -1.0 : 1.0) * total;
}

double log_sum_exp(const std::vector<double>& v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// exp(terms) summed pairwise after a common shift
ScaledComplex scaled_sum(const std::vector<Complex>& log_terms) {
  double shift = -std::numeric_limits<double>::infinity();
  for (const Complex& t : log_terms) shift = std::max(shift, t.real());
  ScaledComplex out;
  if (!std::isfinite(shift)) return out;
  std::vector<Complex> e(log_terms.size());
  for (std::size_t i = 0; i < log_terms.size(); ++i) e[i] = std::exp(log_terms[i] - shift);
  out.shift = shift;
  out.scaled = pairwise_sum(e.data(), e.size());
  return out;
}

// log of F(eta) eta^{-N-1} d eta / (2 pi i d theta / M) at the nodes
// theta_m = 2 pi m / M for m = first, first + stride, ...
std::vector<Complex> contour_terms(const LogIntegrand& log_f, const ContourSpec& spec, int N, int M, int first,
                                   int stride) {
  const int count = (M - first + stride - 1) / stride;
  std::vector<Complex> terms(static_cast<std::size_t>(count));
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 4)
  for (int t = 0; t < count; ++t) {
    try {
      const double theta = 2.0 * std::numbers::pi * (first + t * stride) / M;
      const Complex u = std::polar(spec.radius, theta);
      const Complex eta = spec.center + u;
      const Complex log_eta = spec.center == Complex(0.0, 0.0) ? Complex(std::log(spec.radius), theta) : std::log(eta);
      terms[static_cast<std::size_t>(t)] = log_f(eta) + std::log(u) - static_cast<double>(N + 1) * log_eta;
    } catch (...) {
#pragma omp critical
      failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return terms;
}

void check_spec(const ContourSpec& spec, int N) {
  if (!(spec.radius > 0.0)) throw PreconditionError("contour radius must be positive");
  if (spec.nodes < 2 || spec.nodes % 2) throw PreconditionError("contour node count must be even");
  if (N < 0) throw PreconditionError("coefficient index must be non-negative");
}

ScaledComplex divide(ScaledComplex s, int M) {
  s.shift -= std::log(static_cast<double>(M));
  return s;
}

double relative_change(const ScaledComplex& a, const ScaledComplex& b) {
  ScaledComplex diff = a;
  ScaledComplex neg = b;
  neg.scaled = -neg.scaled;
  diff += neg;
  return std::exp(diff.log_abs() - b.log_abs());
}

struct FugacityInput {
  double z0, zt;
  std::int64_t N;
  double top, top_tilde;
};

using LogDet = std::function<Complex(Complex)>;

// I = [eta^N] Det(1 - z G) / Det(1 - z eta G); top is the largest eigenvalue
ContourResult occupation_contour(const LogDet& logdet, double z, double top, int N, const ContourOptions& options) {
  const Complex l0 = logdet(z);
  ContourSpec spec;
  if (options.factor_top_pole) {
    spec.nodes = options.min_nodes > 0 ? options.min_nodes : 128;
    const double p = z * top / (1.0 - z * top);
    return contour_coefficient_factored(
        [&](Complex eta) { return l0 - logdet(z * eta) + std::log(1.0 - p * (eta - 1.0)); }, p, spec, N,
        options.rel_tol, options.max_nodes);
  }
  spec.nodes = options.min_nodes > 0 ? options.min_nodes : default_contour_nodes(N);
  return contour_coefficient_adaptive([&](Complex eta) { return l0 - logdet(z * eta); }, spec, N, options.rel_tol,
                                      options.max_nodes);
}

FiniteLaplaceResult laplace_from_parts(const LogDet& plain, const LogDet& deformed, const FugacityInput& in,
                                       const ContourOptions& options) {
  if (in.N < 1 || in.N > std::numeric_limits<int>::max() / 2) throw PreconditionError("N out of range");
  const int N = static_cast<int>(in.N);
  FiniteLaplaceResult r;
  r.N = in.N;
  r.z0 = in.z0;
  r.ztilde0 = in.zt;
  const Complex lp0 = plain(in.z0), ld0 = deformed(in.zt);
  r.log_fugacity_factor = static_cast<double>(N) * std::log(in.z0 / in.zt);
  r.log_det_ratio = lp0.real() - ld0.real();

  const ContourResult cp = occupation_contour(plain, in.z0, in.top, N, options);
  const ContourResult cd = occupation_contour(deformed, in.zt, in.top_tilde, N, options);
  r.log_contour_plain = cp.coefficient.log_real();
  r.log_contour_deformed = cd.coefficient.log_real();
  r.imag_residue = std::max(cp.coefficient.imag_ratio(), cd.coefficient.imag_ratio());
  r.nodes_plain = cp.nodes;
  r.nodes_deformed = cd.nodes;

  r.log_value = r.log_fugacity_factor + r.log_det_ratio + r.log_contour_deformed - r.log_contour_plain;
  if (r.log_value > 0.0 && r.log_value < 1e-9) r.log_value = 0.0;
  r.value = std::exp(r.log_value);
  return r;
}

Complex log_det_occupations(const DiagonalSpectrum& p, Complex w) {
  // sum_j m_j log(1 - p_j w)
  Complex s = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) s += p.multiplicity(j) * std::log(1.0 - p.values(j) * w);
  return s;
}

} // namespace

double permanent_ryser(const Eigen::Ref<const Mat>& A) { return ryser<double>(A); }
Complex permanent_ryser(const Eigen::Ref<const CMat>& A) { return ryser<Complex>(A); }

double log_h_N_symmetric(const DiagonalSpectrum& spectrum, int N) {
  if (N < 0) throw PreconditionError("h_N needs N >= 0");
  if (N == 0) return 0.0;
  std::vector<double> g, m;
  for (Eigen::Index j = 0; j < spectrum.size(); ++j) {
    const double v = spectrum.values(j);
    if (v < 0.0) throw PreconditionError("h_N expects non-negative eigenvalues");
    if (v > 0.0 && spectrum.multiplicity(j) > 0) {
      g.push_back(v);
      m.push_back(spectrum.multiplicity(j));
    }
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  if (g.empty()) return ninf;
  const double gmax = *std::max_element(g.begin(), g.end());
  std::vector<double> ratio(g.size()), power(g.size(), 1.0);
  for (std::size_t j = 0; j < g.size(); ++j) ratio[j] = g[j] / gmax;

  // power sums P_i = sum_j m_j g_j^i in log form
  std::vector<double> logP(static_cast<std::size_t>(N) + 1, ninf);
  for (int i = 1; i <= N; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      power[j] *= ratio[j];
      s += m[j] * power[j];
    }
    logP[static_cast<std::size_t>(i)] = i * std::log(gmax) + std::log(s);
  }
  // Newton: k h_k = sum_{i=1}^k P_i h_{k-i}, all terms non-negative
  std::vector<double> logh(static_cast<std::size_t>(N) + 1, ninf), buf;
  logh[0] = 0.0;
  for (int k = 1; k <= N; ++k) {
    buf.clear();
    for (int i = 1; i <= k; ++i) buf.push_back(logP[static_cast<std::size_t>(i)] + logh[static_cast<std::size_t>(k - i)]);
    logh[static_cast<std::size_t>(k)] = log_sum_exp(buf) - std::log(static_cast<double>(k));
  }
  return logh[static_cast<std::size_t>(N)];
}

double log_h_N_symmetric(const Vec& eigenvalues, int N) {
  return log_h_N_symmetric(DiagonalSpectrum::simple(eigenvalues), N);
}

ScaledComplex& ScaledComplex::operator+=(const ScaledComplex& o) {
  if (!std::isfinite(o.shift)) return *this;
  if (!std::isfinite(shift)) return *this = o;
  if (o.shift > shift) {
    scaled = scaled * std::exp(shift - o.shift) + o.scaled;
    shift = o.shift;
  } else {
    scaled += o.scaled * std::exp(o.shift - shift);
  }
  return *this;
}

double ScaledComplex::log_real() const {
  if (!(scaled.real() > 0.0)) throw NumericalGuardError("contour value has a non-positive real part");
  return shift + std::log(scaled.real());
}

ContourResult contour_coefficient(const LogIntegrand& log_f, const ContourSpec& spec, int N) {
  check_spec(spec, N);
  ContourResult r;
  r.nodes = spec.nodes;
  r.coefficient = divide(scaled_sum(contour_terms(log_f, spec, N, spec.nodes, 0, 1)), spec.nodes);
  return r;
}

ContourResult contour_coefficient_adaptive(const LogIntegrand& log_f, const ContourSpec& spec, int N, double rel_tol,
                                           int max_nodes) {
  check_spec(spec, N);
  int M = spec.nodes;
  ScaledComplex sum = scaled_sum(contour_terms(log_f, spec, N, M, 0, 1));
  ScaledComplex prev = divide(sum, M);
  while (true) {
    if (2 * M > max_nodes)
      throw QuadratureError("contour did not converge within " + std::to_string(max_nodes) + " nodes");
    // the refined rule adds the midpoints
    sum += scaled_sum(contour_terms(log_f, spec, N, 2 * M, 1, 2));
    M *= 2;
    const ScaledComplex cur = divide(sum, M);
    const double change = relative_change(cur, prev);
    if (change < rel_tol) return {cur, M, change};
    prev = cur;
  }
}

ContourResult contour_coefficient_factored(const LogIntegrand& log_rest, double p, const ContourSpec& spec, int N,
                                           double rel_tol, int max_nodes) {
  if (!(p > 0.0)) throw PreconditionError("factored pole needs p > 0");
  if (spec.center != Complex(0.0, 0.0)) throw PreconditionError("factored contour must be centred at 0");
  // 1 / (1 - p (z - 1)) = sum_k a_k z^k with a_k = q^k / (1 + p), q = p / (1 + p)
  const double log_q = std::log(p) - std::log1p(p), log_norm = -std::log1p(p);
  const LogIntegrand combined = [&, N](Complex eta) {
    const Complex log_w = log_q + std::log(eta);
    const Complex w = std::exp(log_w);
    const Complex wn = std::exp(static_cast<double>(N + 1) * log_w);
    return log_rest(eta) + log_norm + std::log(1.0 - wn) - std::log(1.0 - w);
  };
  return contour_coefficient_adaptive(combined, spec, N, rel_tol, max_nodes);
}

int default_contour_nodes(int N) {
  const int m = std::max(512, static_cast<int>(std::ceil(8.0 * std::sqrt(static_cast<double>(N)))));
  return m + (m % 2);
}

FiniteLaplaceResult finite_laplace(const DiagonalSpectrum& plain, const DiagonalSpectrum& deformed, std::int64_t N,
                                   const ContourOptions& options) {
  const double n = static_cast<double>(N);
  const FugacityInput in{solve_z0(plain, n), solve_z0(deformed, n), N, plain.top(), deformed.top()};
  return laplace_from_parts([&](Complex z) { return det_one_minus_zG(plain, z).log(); },
                            [&](Complex z) { return det_one_minus_zG(deformed, z).log(); }, in, options);
}

FiniteLaplaceResult finite_laplace(const LowRankDeformation& def, std::int64_t N, const FugacityPair& fp,
                                   const ContourOptions& options) {
  const DiagonalSpectrum plain = def.spectrum().diagonal();
  const FugacityInput in{fp.z0, fp.ztilde0, N, 1.0, fp.gtilde0};
  if (def.is_zero()) {
    FiniteLaplaceResult r;
    r.N = N;
    r.z0 = r.ztilde0 = fp.z0;
    return r;
  }
  return laplace_from_parts([&](Complex z) { return det_one_minus_zG(plain, z).log(); },
                            [&](Complex z) { return det_one_minus_zGtilde(def, z).log(); }, in, options);
}

FiniteLaplaceResult finite_laplace(const LowRankDeformation& def, std::int64_t N, const ContourOptions& options) {
  return finite_laplace(def, N, solve_fugacities(def, N), options);
}

LemmaA1Check verify_lemma_A1(double x, double p, double slack) {
  if (!(x >= 0.0 && x <= 1.0) || !(p >= 0.0) || !(p * x < 1.0))
    throw PreconditionError("inequality check needs 0 <= x <= 1, p >= 0, p x < 1");
  LemmaA1Check c;
  c.middle = std::exp(p * std::log1p(x) + std::log1p(-p * x));
  c.lower = std::exp(-p * (1 + p) * (1 + p * x * x) * x * x / (2 * (1 - p * x) * (1 - p * x)));
  c.holds = c.middle <= 1.0 + slack && c.middle >= c.lower - slack;
  return c;
}

LemmaA2Result verify_lemma_A2(const DiagonalSpectrum& occupations, std::int64_t N, double R, double c,
                              const ContourOptions& options) {
  if (occupations.size() == 0) throw PreconditionError("occupation contour check needs at least one occupation number");
  if (N < 1 || N > std::numeric_limits<int>::max() / 2) throw PreconditionError("N out of range");
  if (!(c > 0.0 && c < 1.0)) throw PreconditionError("occupation contour check needs c in (0, 1)");
  // locate p0 (must be a simple value) and p1
  Eigen::Index top = 0;
  for (Eigen::Index j = 1; j < occupations.size(); ++j)
    if (occupations.values(j) > occupations.values(top)) top = j;
  if (occupations.multiplicity(top) != 1.0) throw PreconditionError("occupation contour check needs a simple largest occupation");
  LemmaA2Result r;
  r.c = c;
  r.p0 = occupations.values(top);
  double moment = 0.0;
  for (Eigen::Index j = 0; j < occupations.size(); ++j) {
    if (j == top) continue;
    const double p = occupations.values(j);
    r.p1 = std::max(r.p1, p);
    moment += occupations.multiplicity(j) * p * (1 + p);
  }
  if (!(r.p1 < r.p0)) throw PreconditionError("occupation contour check needs p0 > p1");
  r.R = R > 0.0 ? R : std::sqrt(r.p0);
  r.second_moment_ratio = r.R * r.R * moment / (r.p0 * r.p0);
  r.growth_ratio = r.p0 / (r.R * std::exp(std::log1p(c) / c * r.R));
  r.radius_ok = 1.0 < r.R && r.R < c * r.p0 * std::min(1.0, r.p1 > 0.0 ? 1.0 / r.p1 : 1.0);

  const int n = static_cast<int>(N);
  const LogIntegrand log_f = [&](Complex eta) { return -log_det_occupations(occupations, eta - 1.0); };
  ContourSpec spec;
  spec.nodes = options.min_nodes > 0 ? options.min_nodes : default_contour_nodes(n);
  const ContourResult main = contour_coefficient_adaptive(log_f, spec, n, options.rel_tol, options.max_nodes);
  r.value = r.p0 * main.coefficient.value().real();
  r.imag_residue = main.coefficient.imag_ratio();
  r.nodes = main.nodes;

  // residue at eta = 1 + 1/p0
  const double u = 1.0 / r.p0;
  double log_i1 = -(r.p0 + 1.0) * std::log1p(u);
  for (Eigen::Index j = 0; j < occupations.size(); ++j) {
    if (j == top) continue;
    const double p = occupations.values(j);
    log_i1 -= occupations.multiplicity(j) * (p * std::log1p(u) + std::log1p(-p * u));
  }
  r.I1 = std::exp(log_i1);

  // outer circle, only meaningful when it stays inside the next pole
  if (r.R / r.p0 < (r.p1 > 0.0 ? 1.0 / r.p1 : std::numeric_limits<double>::infinity())) {
    ContourSpec outer = spec;
    outer.radius = 1.0 + r.R / r.p0;
    outer.nodes = 2 * main.nodes;
    r.I2 = r.p0 * contour_coefficient(log_f, outer, n).coefficient.value().real();
  } else {
    r.I2 = std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

LemmaA2Result verify_lemma_A2(const LatticeSpectrum& spectrum, std::int64_t N, const ContourOptions& options) {
  const DiagonalSpectrum g = spectrum.diagonal();
  const double z0 = solve_z0(g, static_cast<double>(N));
  DiagonalSpectrum p = g;
  for (Eigen::Index j = 0; j < p.size(); ++j) p.values(j) = z0 * g.values(j) / (1.0 - z0 * g.values(j));
  const ModelParams& params = spectrum.params();
  return verify_lemma_A2(p, N, std::pow(params.L, 0.5 * (params.d - 2)), 0.5, options);
}

} // namespace becpf
