#include "becpf/fredholm.hpp"

#include "becpf/errors.hpp"

#include <cmath>
#include <numbers>

namespace becpf {

namespace {

// log(1 - w) without losing digits for small |w|
Complex log_one_minus(Complex w) {
  if (w.imag() == 0.0) {
    if (w.real() == 1.0) throw SingularInputError("determinant factor 1 - z g vanishes");
    if (w.real() < 1.0) return {std::log1p(-w.real()), 0.0};
    return {std::log(w.real() - 1.0), std::numbers::pi};
  }
  const double re = 0.5 * std::log1p(-2.0 * w.real() + std::norm(w));
  return {re, std::atan2(-w.imag(), 1.0 - w.real())};
}

DetResult from_log(Complex lg) { return {lg.real(), std::polar(1.0, lg.imag())}; }

// log det of a general complex matrix from its LU factors
DetResult lu_log_det(const CMat& E) {
  Eigen::PartialPivLU<CMat> lu(E);
  const CMat& U = lu.matrixLU();
  double la = 0.0;
  Complex ph = lu.permutationP().determinant();
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const double a = std::abs(U(i, i));
    if (a == 0.0) throw SingularInputError("singular matrix in determinant update");
    la += std::log(a);
    ph *= U(i, i) / a;
  }
  return {la, ph / std::abs(ph)};
}

struct Update {
  CMat E;  // small matrix whose determinant corrects the diagonal part
  CMat dE; // its derivative in z (only filled when asked)
};

// Blocks of the low-rank update at z. For the full sector the zero mode is an
// extra row/column so that nothing divides by 1 - z.
Update update_matrix(const LowRankDeformation& def, Complex z, Sector sector, bool derivative) {
  const int r = def.rank();
  auto [are, aim] = def.combine_complex([z](double g) { return 1.0 / (1.0 - z * g); }, true);
  CMat AQ(r, r);
  AQ.real() = are;
  AQ.imag() = aim;
  CMat dAQ;
  if (derivative) {
    auto [dre, dim] = def.combine_complex([z](double g) { return g / ((1.0 - z * g) * (1.0 - z * g)); }, true);
    dAQ.resize(r, r);
    dAQ.real() = dre;
    dAQ.imag() = dim;
  }
  Update u;
  if (sector == Sector::excited) {
    u.E = CMat::Identity(r, r) + z * AQ;
    if (derivative) u.dE = AQ + z * dAQ;
    return u;
  }
  const Eigen::RowVectorXcd y0 = def.zero_row().cast<Complex>();
  const CMat y0y0 = y0.transpose() * y0;
  u.E.resize(r + 1, r + 1);
  u.E(0, 0) = 1.0 - z;
  u.E.block(0, 1, 1, r) = -z * y0;
  u.E.block(1, 0, r, 1) = z * y0.transpose();
  u.E.block(1, 1, r, r) = CMat::Identity(r, r) + z * (AQ + y0y0);
  if (derivative) {
    u.dE.resize(r + 1, r + 1);
    u.dE(0, 0) = -1.0;
    u.dE.block(0, 1, 1, r) = -y0;
    u.dE.block(1, 0, r, 1) = y0.transpose();
    u.dE.block(1, 1, r, r) = AQ + y0y0 + z * dAQ;
  }
  return u;
}

} // namespace

DetResult det_one_minus_zG(const DiagonalSpectrum& spectrum, Complex z, bool skip_top) {
  Eigen::Index top = -1;
  if (skip_top && spectrum.size()) spectrum.values.maxCoeff(&top);
  Complex lg = 0.0;
  for (Eigen::Index j = spectrum.size(); j-- > 0;) {
    if (j == top) continue;
    lg += spectrum.multiplicity(j) * log_one_minus(z * spectrum.values(j));
  }
  return from_log(lg);
}

DetResult det_one_minus_zG(const LatticeSpectrum& spectrum, Complex z) {
  return det_one_minus_zG(spectrum.diagonal(), z);
}

DetResult det_one_minus_zGtilde(const LowRankDeformation& def, Complex z, Sector sector) {
  // Det(1 - z G_Q) times the small determinant
  DetResult base = det_one_minus_zG(def.spectrum().diagonal(), z, true);
  if (def.is_zero()) {
    if (sector == Sector::full) base *= from_log(log_one_minus(z));
    return base;
  }
  return base * lu_log_det(update_matrix(def, z, sector, false).E);
}

double trace_H(const DiagonalSpectrum& spectrum, double z, bool skip_top) {
  Eigen::Index top = -1;
  if (skip_top && spectrum.size()) spectrum.values.maxCoeff(&top);
  double s = 0.0;
  for (Eigen::Index j = spectrum.size(); j-- > 0;) {
    if (j == top) continue;
    const double zg = z * spectrum.values(j);
    if (zg == 1.0) throw SingularInputError("trace_H: z g = 1");
    s += spectrum.multiplicity(j) * zg / (1.0 - zg);
  }
  return s;
}

double trace_H(const LatticeSpectrum& spectrum, double z) { return trace_H(spectrum.diagonal(), z); }

double trace_H(const LowRankDeformation& def, double z, Sector sector) {
  double h = trace_H(def.spectrum().diagonal(), z, true);
  if (def.is_zero()) {
    if (sector == Sector::full) {
      if (z == 1.0) throw SingularInputError("trace_H: z g = 1");
      h += z / (1.0 - z);
    }
    return h;
  }
  // -z d/dz log det E(z)
  const Update u = update_matrix(def, z, sector, true);
  const Eigen::PartialPivLU<CMat> lu(u.E);
  return h - z * lu.solve(u.dE).trace().real();
}

DetResult det_one_plus_Kf(const NystromKernel& K) {
  const Eigen::Index m = K.M.rows();
  if (m == 0) return {};
  // prod (1 + lambda_i) = det(I + M); the Cholesky factor gives it in O(m^3 / 3)
  Eigen::LLT<Mat> llt(Mat::Identity(m, m) + K.M);
  if (llt.info() == Eigen::Success) {
    double la = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) la += 2.0 * std::log(llt.matrixL()(i, i));
    return {la, 1.0};
  }
  const Vec lam = Eigen::SelfAdjointEigenSolver<Mat>(K.M, Eigen::EigenvaluesOnly).eigenvalues();
  double la = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) la += std::log1p(lam(i));
  return {la, 1.0};
}

double condensate_quadratic_form(const NystromKernel& K) {
  const Eigen::Index m = K.M.rows();
  if (m == 0) return 0.0;
  const Mat A = Mat::Identity(m, m) + K.M;
  Eigen::LLT<Mat> llt(A);
  if (llt.info() == Eigen::Success) return K.v.dot(llt.solve(K.v));
  // rounding pushed an eigenvalue below -1: clamp the spectrum for the solve only
  Eigen::SelfAdjointEigenSolver<Mat> es(K.M);
  const Vec c = es.eigenvectors().transpose() * K.v;
  return (c.array().square() / (1.0 + es.eigenvalues().array().max(0.0))).sum();
}

PositivityReport positivity_suite(const Box& box, const ModelParams& params, int nodes_per_axis) {
  const NystromKernel K = assemble_nystrom_KLambda(box, params, nodes_per_axis);
  const Eigen::Index m = K.M.rows();
  PositivityReport rep;
  rep.nodes = m;
  Eigen::SelfAdjointEigenSolver<Mat> es(K.M);
  rep.min_eigenvalue = es.eigenvalues()(0);
  rep.lambda_max = es.eigenvalues()(m - 1);
  rep.resolvent_norm = rep.lambda_max / (1.0 + rep.lambda_max);
  // (I + M)^{-1} = U diag(1 / (1 + lambda)) U^T; clamp only for this inverse
  const Vec inv = (1.0 + es.eigenvalues().array().max(0.0)).inverse();
  const Mat resolvent_inv = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
  const Mat R = Mat::Identity(m, m) - resolvent_inv;
  rep.min_resolvent_entry = R.minCoeff();
  // (I + M)^{-1} applied to the weighted indicator sqrt(w)
  rep.min_inverse_indicator = (resolvent_inv * K.v).minCoeff();
  return rep;
}

} // namespace becpf
