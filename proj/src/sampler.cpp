#include "becpf/sampler.hpp"

#include "becpf/contour.hpp"
#include "becpf/errors.hpp"
#include "becpf/spectral.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace becpf {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint32_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), salt};
  return std::mt19937_64(seq);
}

double log_det_spd(const Mat& A) {
  Eigen::LLT<Mat> llt(A);
  if (llt.info() != Eigen::Success) throw NumericalGuardError("matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

Estimate mean_and_error(const std::vector<double>& x) {
  if (x.size() < 2) throw PreconditionError("estimates need at least two samples");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

} // namespace

double PointConfiguration::pair(const TestFunction& f) const {
  double s = 0.0;
  for (Eigen::Index j = 0; j < points.cols(); ++j) s += f(points.col(j));
  return s;
}

GaussianIdentityCheck gaussian_identity(const Mat& K, const Vec& d, double c) {
  const Eigen::Index n = K.rows();
  const Vec m = Vec::Constant(n, c);
  GaussianIdentityCheck g;
  // int exp(-phi^* K^{-1} phi - (phi + m)^* D (phi + m)) / (pi^n det K)
  const Mat Kinv = K.llt().solve(Mat::Identity(n, n));
  const Mat P = Kinv + Mat(d.asDiagonal());
  const Vec Dm = d.cwiseProduct(m);
  g.direct_log = -log_det_spd(K) - log_det_spd(P) - m.dot(Dm) + Dm.dot(P.llt().solve(Dm));
  // det(1 + D^{1/2} K D^{1/2})^{-1} exp(-c^2 (s, (1 + D^{1/2} K D^{1/2})^{-1} s)), s = D^{1/2} 1
  const Vec sq = d.cwiseSqrt();
  const Mat A = Mat::Identity(n, n) + sq.asDiagonal() * K * sq.asDiagonal();
  g.resolvent_log = -log_det_spd(A) - c * c * sq.dot(A.llt().solve(sq));
  return g;
}

double gaussian_identity_suite(int trials, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.05, 1.0), cdist(0.0, 2.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Mat B = Mat::NullaryExpr(n, n, [&] { return normal(rng); }) / std::sqrt(static_cast<double>(n));
    const Mat K = B * B.transpose() + 0.1 * Mat::Identity(n, n);
    const Vec d = Vec::NullaryExpr(n, [&] { return unif(rng); });
    worst = std::max(worst, gaussian_identity(K, d, cdist(rng)).relative_error());
  }
  return worst;
}

FieldSampler::FieldSampler(const ModelParams& params, const Box& window, const SamplerOptions& options)
    : params_(params), window_(window) {
  params.validate();
  const int d = params.d;
  if (window.dim() != d) throw PreconditionError("window dimension does not match d");
  if (!((window.upper - window.lower).minCoeff() > 0.0)) throw PreconditionError("window must have positive sides");
  const double rho_c = critical_density(d, params.beta);
  const double rho = params.density();
  if (!(rho > rho_c)) throw SubcriticalDensityError("sampling the limit field needs rho > rho_c");
  c_ = std::sqrt(rho - rho_c);

  // cell side h with h sqrt(d) <= cell_diameter sqrt(beta)
  const double h_max = options.cell_diameter * std::sqrt(params.beta) / std::sqrt(static_cast<double>(d));
  const Vec sides = window.upper - window.lower;
  per_axis_.resize(d);
  cell_side_.resize(d);
  Eigen::Index cells = 1;
  for (int a = 0; a < d; ++a) {
    per_axis_(a) = std::max(1, static_cast<int>(std::ceil(sides(a) / h_max - 1e-12)));
    cell_side_(a) = sides(a) / per_axis_(a);
    cells *= per_axis_(a);
  }
  if (cells > 20000) throw PreconditionError("sampling grid has " + std::to_string(cells) + " cells; use a smaller window");
  cell_volume_ = cell_side_.prod();
  nodes_.resize(d, cells);
  for (Eigen::Index i = 0; i < cells; ++i) {
    Eigen::Index rem = i;
    for (int a = 0; a < d; ++a) {
      nodes_(a, i) = window.lower(a) + (static_cast<double>(rem % per_axis_(a)) + 0.5) * cell_side_(a);
      rem /= per_axis_(a);
    }
  }

  const KernelTable K(d, params.beta, sides.squaredNorm() * 1.01);
  cov_.resize(cells, cells);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < cells; ++j)
    for (Eigen::Index i = j; i < cells; ++i) cov_(i, j) = cov_(j, i) = K((nodes_.col(i) - nodes_.col(j)).squaredNorm());

  Eigen::SelfAdjointEigenSolver<Mat> es(cov_);
  if (es.info() != Eigen::Success)
    throw NumericalGuardError("covariance factorization failed; coarsen the grid (larger cell_diameter)");
  const Vec& lam = es.eigenvalues();
  const double floor = options.eigen_floor * lam(cells - 1);
  Eigen::Index keep = 0;
  while (keep < cells && lam(cells - 1 - keep) > floor) ++keep;
  factor_ = es.eigenvectors().rightCols(keep) * lam.tail(keep).cwiseSqrt().asDiagonal();
}

CVec FieldSampler::draw_field(std::uint64_t seed, std::uint64_t index) const {
  auto rng = stream(seed, index, 1);
  std::normal_distribution<double> normal;
  const Eigen::Index r = factor_.cols();
  const Vec xr = Vec::NullaryExpr(r, [&] { return normal(rng); });
  const Vec xi = Vec::NullaryExpr(r, [&] { return normal(rng); });
  // circular complex Gaussian: E phi phi^* = factor factor^T
  CVec phi(factor_.rows());
  phi.real() = factor_ * xr / std::numbers::sqrt2;
  phi.imag() = factor_ * xi / std::numbers::sqrt2;
  return phi;
}

PointConfiguration FieldSampler::scatter(const CVec& phi, std::uint64_t seed, std::uint64_t index) const {
  auto rng = stream(seed, index, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<double> coords;
  const int d = params_.d;
  for (Eigen::Index i = 0; i < phi.size(); ++i) {
    const double mean = std::norm(phi(i) + c_) * cell_volume_;
    if (!(mean > 0.0)) continue;
    const long n = std::poisson_distribution<long>(mean)(rng);
    for (long k = 0; k < n; ++k)
      for (int a = 0; a < d; ++a) coords.push_back(nodes_(a, i) + (unif(rng) - 0.5) * cell_side_(a));
  }
  PointConfiguration pc;
  pc.window = window_;
  pc.points = Eigen::Map<const Mat>(coords.data(), d, static_cast<Eigen::Index>(coords.size()) / d);
  return pc;
}

PointConfiguration FieldSampler::draw(std::uint64_t seed, std::uint64_t index) const {
  return scatter(draw_field(seed, index), seed, index);
}

std::vector<PointConfiguration> FieldSampler::draw_many(std::uint64_t seed, std::uint64_t count) const {
  std::vector<PointConfiguration> out(count);
  const long long n = static_cast<long long>(count);
#pragma omp parallel for schedule(dynamic, 64)
  for (long long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = draw(seed, static_cast<std::uint64_t>(i));
  return out;
}

PointConfiguration sample_limit_field(const ModelParams& params, const Box& window, std::uint64_t seed) {
  return FieldSampler(params, window).draw(seed, 0);
}

Estimate empirical_laplace(const std::vector<PointConfiguration>& samples, const TestFunction& f) {
  std::vector<double> x;
  x.reserve(samples.size());
  for (const auto& s : samples) x.push_back(std::exp(-s.pair(f)));
  return mean_and_error(x);
}

Estimate empirical_intensity(const std::vector<PointConfiguration>& samples) {
  std::vector<double> x;
  x.reserve(samples.size());
  for (const auto& s : samples) x.push_back(static_cast<double>(s.size()) / s.window.volume());
  return mean_and_error(x);
}

Estimate batch_means(const std::vector<double>& series, int batches) {
  if (batches < 2 || series.size() < static_cast<std::size_t>(batches))
    throw PreconditionError("batch means need at least as many samples as batches");
  const std::size_t per = series.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < per; ++i) s += series[static_cast<std::size_t>(b) * per + i];
    means.push_back(s / static_cast<double>(per));
  }
  return mean_and_error(means);
}

McmcChain mcmc_finite_chain(const ModelParams& params, int N, const McmcOptions& options, std::uint64_t seed) {
  params.validate();
  if (N < 1 || N > 10) throw PreconditionError("mcmc_finite_chain supports 1 <= N <= 10");
  if (options.steps < 1 || options.thin < 1 || options.burn_in < 0) throw PreconditionError("invalid chain lengths");
  const int d = params.d;
  const double L = params.L, beta = params.beta;
  auto rng = stream(seed, 0, 3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, N - 1);

  const auto wrap = [L](double x) { return x - L * std::floor(x / L + 0.5); };
  const auto kernel = [&](const auto& x, const auto& y) {
    double g = 1.0;
    for (int a = 0; a < d; ++a) g *= heat_kernel_torus_1d(x(a) - y(a), L, beta);
    return g;
  };

  Mat X(d, N);
  for (int i = 0; i < N; ++i)
    for (int a = 0; a < d; ++a) X(a, i) = (unif(rng) - 0.5) * L;
  Mat A(N, N);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) A(i, j) = kernel(X.col(i), X.col(j));
  double per = permanent_ryser(A);

  McmcChain chain;
  long accepted = 0;
  const double half = options.step * std::sqrt(beta);
  Vec y(d);
  Mat B(N, N);
  for (long step = 1; step <= options.burn_in + options.steps; ++step) {
    const int i = pick(rng);
    for (int a = 0; a < d; ++a) y(a) = wrap(X(a, i) + (2.0 * unif(rng) - 1.0) * half);
    B = A;
    for (int j = 0; j < N; ++j) B(i, j) = B(j, i) = kernel(y, j == i ? y : Vec(X.col(j)));
    const double per_new = permanent_ryser(B);
    if (unif(rng) * per < per_new) {
      X.col(i) = y;
      A = B;
      per = per_new;
      ++accepted;
    }
    if (step > options.burn_in && (step - options.burn_in) % options.thin == 0) {
      PointConfiguration pc;
      pc.points = X;
      pc.window = Box::centered_cube(d, L);
      chain.samples.push_back(std::move(pc));
    }
  }
  chain.acceptance = static_cast<double>(accepted) / static_cast<double>(options.burn_in + options.steps);
  return chain;
}

PointConfiguration mcmc_finite_sample(const ModelParams& params, int N, long steps, std::uint64_t seed) {
  McmcOptions o;
  o.steps = steps;
  o.burn_in = 0;
  o.thin = steps;
  return mcmc_finite_chain(params, N, o, seed).samples.back();
}

} // namespace becpf
