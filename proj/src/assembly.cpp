#include "becpf/assembly.hpp"

#include "becpf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace becpf {

using std::numbers::pi;

Eigen::RowVectorXd LowRankDeformation::zero_row() const { return Yr_.row(0); }

double LowRankDeformation::trace() const {
  double t = 0.0;
  for (const auto& T : T_) t += T.trace();
  return t;
}

double LowRankDeformation::zero_mode_expectation() const {
  return is_zero() ? 0.0 : Yr_.row(0).squaredNorm();
}

CMat LowRankDeformation::dense_matrix() const {
  const int n = spectrum_->size();
  CMat G = spectrum_->g().cast<Complex>().asDiagonal();
  if (is_zero()) return G;
  CMat Y(n, rank());
  Y.real() = Yr_;
  Y.imag() = Yi_;
  G.noalias() -= Y * Y.adjoint();
  return G;
}

void require_support_inside(const TestFunction& f, const ModelParams& params) {
  if (f.is_zero()) return;
  const Box box = f.bounding_box();
  const double h = 0.5 * params.L;
  if ((box.lower.array() < -h).any() || (box.upper.array() > h).any())
    throw PreconditionError("supp f must lie inside the box [-L/2, L/2]^d");
}

namespace {

// Pivoted Cholesky B ~ C C^T, stopping at rank_tol relative to the largest diagonal.
Mat pivoted_cholesky(const Mat& B, double rank_tol) {
  const Eigen::Index m = B.rows();
  Vec diag = B.diagonal();
  const double d0 = diag.maxCoeff();
  Mat C(m, std::min<Eigen::Index>(m, 64));
  Eigen::Index r = 0;
  while (r < m) {
    Eigen::Index p;
    const double dmax = diag.maxCoeff(&p);
    if (!(dmax > rank_tol * d0)) break;
    if (r == C.cols()) C.conservativeResize(m, std::min<Eigen::Index>(m, 2 * C.cols()));
    Vec col = B.col(p);
    if (r > 0) col.noalias() -= C.leftCols(r) * C.row(p).head(r).transpose();
    col /= std::sqrt(dmax);
    C.col(r) = col;
    diag -= col.cwiseAbs2();
    diag(p) = 0.0;
    ++r;
  }
  return C.leftCols(r);
}

double weighted_norm(const TestFunction& f, const QuadratureRule& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.size(); ++i) s += q.weights(i) * f.one_minus_exp(q.nodes.col(i));
  return s;
}

} // namespace

LowRankDeformation assemble_deformation(const TestFunction& f, std::shared_ptr<const LatticeSpectrum> spectrum,
                                        const AssemblyOptions& options) {
  const ModelParams& params = spectrum->params();
  if (f.dim() != params.d) throw PreconditionError("test function and model dimensions differ");
  require_support_inside(f, params);

  LowRankDeformation def;
  def.spectrum_ = spectrum;
  const int nmodes = spectrum->size();
  if (f.is_zero()) {
    def.quad_ = {Mat(params.d, 0), Vec(0)};
    def.v_ = Vec(0);
    def.Yr_ = Mat(nmodes, 0);
    def.Yi_ = Mat(nmodes, 0);
    def.T_.assign(spectrum->shells().size(), Mat(0, 0));
    return def;
  }

  // pick the rule by self-convergence of trace(W W*), which is proportional
  // to the quadrature of 1 - e^{-f}
  BallOrder order = options.order;
  for (int attempt = 0;; ++attempt) {
    const double coarse = weighted_norm(f, f.support_rule(order));
    const double fine = weighted_norm(f, f.support_rule(order.refined()));
    def.quad_delta_ = std::abs(coarse - fine) / std::abs(fine);
    if (def.quad_delta_ <= options.trace_tol) break;
    if (attempt >= options.max_refinements)
      throw QuadratureError("trace(W W*) did not converge under quadrature refinement");
    order = order.refined();
  }
  def.order_ = order;
  def.quad_ = f.support_rule(order);
  const Eigen::Index m = def.quad_.size();
  const Mat& x = def.quad_.nodes;
  def.v_.resize(m);
  for (Eigen::Index i = 0; i < m; ++i)
    def.v_(i) = std::sqrt(f.one_minus_exp(x.col(i)) * def.quad_.weights(i));

  // Gram matrix W* W = v G_L v on the nodes
  Mat B(m, m);
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      double g = 1.0;
      for (int a = 0; a < params.d; ++a) g *= heat_kernel_torus_1d(x(a, i) - x(a, j), params.L, params.beta);
      B(i, j) = B(j, i) = def.v_(i) * g * def.v_(j);
    }
  }
  const Mat C = pivoted_cholesky(B, options.rank_tol);
  const Eigen::Index r = C.cols();
  const Mat Q = Eigen::HouseholderQR<Mat>(C).householderQ() * Mat::Identity(m, r);

  // Y = W Q, built in blocks of modes
  def.Yr_.resize(nmodes, r);
  def.Yi_.resize(nmodes, r);
  const double q = 2.0 * pi / params.L;
  const double norm = std::pow(params.L, -0.5 * params.d);
  const Mat xq = q * x;
  constexpr int block = 256;
  const int nblocks = (nmodes + block - 1) / block;
#pragma omp parallel for schedule(dynamic)
  for (int bi = 0; bi < nblocks; ++bi) {
    const int k0 = bi * block, nb = std::min(block, nmodes - k0);
    const Mat phase = spectrum->modes().middleCols(k0, nb).cast<double>().transpose() * xq;
    const Vec amp = spectrum->g().segment(k0, nb).cwiseSqrt() * norm;
    const Mat c = amp.asDiagonal() * phase.array().cos().matrix() * def.v_.asDiagonal();
    const Mat s = amp.asDiagonal() * phase.array().sin().matrix() * def.v_.asDiagonal();
    def.Yr_.middleRows(k0, nb).noalias() = c * Q;
    def.Yi_.middleRows(k0, nb).noalias() = -s * Q;
  }

  const auto& shells = spectrum->shells();
  def.T_.resize(shells.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t s = 0; s < shells.size(); ++s) {
    const auto yr = def.Yr_.middleRows(shells[s].first, shells[s].multiplicity);
    const auto yi = def.Yi_.middleRows(shells[s].first, shells[s].multiplicity);
    Mat T = Mat::Zero(r, r);
    T.selfadjointView<Eigen::Lower>().rankUpdate(yr.transpose());
    T.selfadjointView<Eigen::Lower>().rankUpdate(yi.transpose());
    def.T_[s] = T.selfadjointView<Eigen::Lower>();
  }
  return def;
}

LowRankDeformation assemble_deformation(const TestFunction& f, const ModelParams& params,
                                        const AssemblyOptions& options) {
  return assemble_deformation(f, std::make_shared<const LatticeSpectrum>(LatticeSpectrum::complete(params)),
                              options);
}

namespace {

Mat secular_matrix(const LowRankDeformation& def, double mu) {
  Mat S = Mat::Identity(def.rank(), def.rank());
  S -= def.combine([mu](double g) { return 1.0 / (g - mu); }, false);
  return S;
}

double smallest_eigenvalue(const Mat& S) {
  return Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues()(0);
}

} // namespace

TopEigenpair top_deformed_eigenpair(const LowRankDeformation& def) {
  const double g1 = def.spectrum().g1();
  if (def.is_zero()) return {1.0, 1.0, g1};
  // the zero mode alone gives the Rayleigh quotient 1 - (phi_0, D phi_0)
  if (1.0 - def.zero_mode_expectation() <= g1)
    throw OrderingError("box too small: 1 - |1 - e^{-f}|_1 / L^d does not exceed g_1");

  // S(mu) is decreasing in mu and positive definite exactly for mu < g~_0
  double lo = g1, hi = 1.0;
  while (hi - lo > 1e-15 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    Eigen::LLT<Mat> llt(secular_matrix(def, mid));
    if (llt.info() == Eigen::Success)
      lo = mid;
    else
      hi = mid;
  }
  // secant polish on the smallest eigenvalue, kept inside the bracket
  double mu = 0.5 * (lo + hi);
  {
    const double flo = smallest_eigenvalue(secular_matrix(def, lo));
    const double fhi = smallest_eigenvalue(secular_matrix(def, hi));
    if (flo > 0.0 && fhi < 0.0) {
      const double cand = lo - flo * (hi - lo) / (fhi - flo);
      if (cand > lo && cand < hi) mu = cand;
    }
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(secular_matrix(def, mu));
  const Vec c = es.eigenvectors().col(0);
  const double head = def.zero_row().dot(c) / (1.0 - mu);
  const Mat D2 = def.combine([mu](double g) { return 1.0 / ((g - mu) * (g - mu)); }, false);
  const double norm2 = c.dot(D2 * c);
  return {mu, std::min(1.0, std::abs(head) / std::sqrt(norm2)), g1};
}

Eigen::Index FourierCoefficients::index(const Eigen::Ref<const IVec>& m) const {
  const int side = 2 * kmax_ + 1;
  Eigen::Index idx = 0, stride = 1;
  for (int a = 0; a < d_; ++a) {
    if (std::abs(m(a)) > kmax_) throw PreconditionError("Fourier index outside the stored cube");
    idx += (m(a) + kmax_) * stride;
    stride *= side;
  }
  return idx;
}

FourierCoefficients fourier_coeffs_exp_minus_f(const TestFunction& f, const ModelParams& params, int kmax) {
  require_support_inside(f, params);
  const int d = params.d, side = 2 * kmax + 1;
  Eigen::Index total = 1;
  for (int a = 0; a < d; ++a) total *= side;
  CVec h(total);
  const double q = 2.0 * pi / params.L;
  const double vol = params.volume();
  // radial transforms only depend on |m|^2
  std::vector<std::map<long, double>> radial(f.bumps().size());
  IVec m = IVec::Constant(d, -kmax);
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    const long n2 = m.squaredNorm();
    const Vec qv = q * m.cast<double>();
    Complex c = 0.0;
    for (std::size_t b = 0; b < f.bumps().size(); ++b) {
      auto it = radial[b].find(n2);
      if (it == radial[b].end())
        it = radial[b].emplace(n2, f.radial_transform(f.bumps()[b], q * std::sqrt(static_cast<double>(n2)))).first;
      c += std::polar(it->second, -qv.dot(f.bumps()[b].x0));
    }
    h(idx) = (n2 == 0 ? 1.0 : 0.0) - c / vol;
    for (int a = 0; a < d; ++a) {
      if (++m(a) <= kmax) break;
      m(a) = -kmax;
    }
  }
  return FourierCoefficients(d, kmax, std::move(h));
}

CMat galerkin_matrix(const TestFunction& f, const LatticeSpectrum& spectrum) {
  const IMat& k = spectrum.modes();
  const int kmax = k.size() ? k.cwiseAbs().maxCoeff() : 0;
  const FourierCoefficients h = fourier_coeffs_exp_minus_f(f, spectrum.params(), 2 * kmax);
  const int n = spectrum.size();
  const Vec sg = spectrum.g().cwiseSqrt();
  CMat A(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) A(i, j) = sg(i) * h(k.col(i) - k.col(j)) * sg(j);
  return A;
}

namespace {

NystromKernel nystrom(QuadratureRule quad, Vec s, const ModelParams& params, double r2_max) {
  NystromKernel K{std::move(quad), std::move(s), Vec(), Mat()};
  const Eigen::Index m = K.quad.size();
  K.v = K.s.cwiseProduct(K.quad.weights.cwiseSqrt());
  K.M.resize(m, m);
  if (m == 0) return K;
  const KernelTable table(params.d, params.beta, r2_max * (1.0 + 1e-12));
  const Mat& x = K.quad.nodes;
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      K.M(i, j) = K.M(j, i) = K.v(i) * table((x.col(i) - x.col(j)).squaredNorm()) * K.v(j);
  return K;
}

} // namespace

NystromKernel assemble_nystrom_Kf(const TestFunction& f, const ModelParams& params, const BallOrder& order) {
  QuadratureRule quad = f.support_rule(order);
  Vec s(quad.size());
  for (Eigen::Index i = 0; i < quad.size(); ++i) s(i) = std::sqrt(f.one_minus_exp(quad.nodes.col(i)));
  const double diam = f.support_diameter();
  return nystrom(std::move(quad), std::move(s), params, diam * diam);
}

NystromKernel assemble_nystrom_KLambda(const Box& box, const ModelParams& params, int nodes_per_axis) {
  QuadratureRule quad = box_rule(box, nodes_per_axis);
  Vec s = Vec::Ones(quad.size());
  return nystrom(std::move(quad), std::move(s), params, (box.upper - box.lower).squaredNorm());
}

Complex lattice_resolvent_kernel_complex(const LatticeSpectrum& spectrum, double z, const Eigen::Ref<const Vec>& x,
                                         const Eigen::Ref<const Vec>& y) {
  if (!(z > 0.0 && z <= 1.0)) throw PreconditionError("lattice resolvent kernel needs 0 < z <= 1");
  const ModelParams& params = spectrum.params();
  const Vec dq = (2.0 * pi / params.L) * (x - y);
  double re = 0.0, im = 0.0;
  for (std::size_t s = spectrum.shells().size(); s-- > 1;) {
    const Shell& sh = spectrum.shells()[s];
    const double c = z * sh.g / (1.0 - z * sh.g);
    for (int j = sh.first; j < sh.first + sh.multiplicity; ++j) {
      const double ph = spectrum.modes().col(j).cast<double>().dot(dq);
      re += c * std::cos(ph);
      im += c * std::sin(ph);
    }
  }
  return Complex(re, im) / params.volume();
}

double lattice_resolvent_kernel(const LatticeSpectrum& spectrum, double z, const Eigen::Ref<const Vec>& x,
                                const Eigen::Ref<const Vec>& y) {
  return lattice_resolvent_kernel_complex(spectrum, z, x, y).real();
}

} // namespace becpf
