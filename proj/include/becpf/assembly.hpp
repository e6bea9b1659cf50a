#pragma once

#include "becpf/spectral.hpp"
#include "becpf/test_function.hpp"
#include "becpf/types.hpp"

#include <memory>
#include <vector>

namespace becpf {

struct AssemblyOptions {
  BallOrder order{};
  // pivoted Cholesky of the node Gram matrix stops once the largest remaining
  // diagonal entry is below rank_tol times the largest initial one
  double rank_tol = 1e-12;
  // required relative agreement of trace(W W*) between the rule and its refinement
  double trace_tol = 1e-8;
  int max_refinements = 3;
};

// G~ = G - W W* on the truncated torus spectrum. W (modes x nodes) is stored
// compressed as Y = W Q with Q an orthonormal basis of the range of W* W, and
// per eigenvalue shell as T_s = Re(Y_s^* Y_s).
class LowRankDeformation {
public:
  const LatticeSpectrum& spectrum() const { return *spectrum_; }
  std::shared_ptr<const LatticeSpectrum> spectrum_ptr() const { return spectrum_; }
  const ModelParams& params() const { return spectrum_->params(); }
  const QuadratureRule& quadrature() const { return quad_; }
  // v_i = sqrt(1 - e^{-f(x_i)}) sqrt(w_i)
  const Vec& node_factor() const { return v_; }
  int rank() const { return static_cast<int>(Yr_.cols()); }
  bool is_zero() const { return rank() == 0; }
  const Mat& Yr() const { return Yr_; }
  const Mat& Yi() const { return Yi_; }
  const std::vector<Mat>& shell_blocks() const { return T_; }
  // row of Y for the zero mode (real)
  Eigen::RowVectorXd zero_row() const;

  // Tr D
  double trace() const;
  // (phi_0, D phi_0)
  double zero_mode_expectation() const;
  // relative change of trace(W W*) against the refined rule
  double quadrature_delta() const { return quad_delta_; }
  // Nodes per bump of the rule that was accepted.
  const BallOrder& order() const { return order_; }

  // sum_s c(g_s) T_s over shells, optionally skipping the zero mode shell
  template <class Coeff>
  Mat combine(Coeff&& c, bool skip_zero) const {
    Mat A = Mat::Zero(rank(), rank());
    for (std::size_t s = skip_zero ? 1 : 0; s < T_.size(); ++s) A.noalias() += c(spectrum_->shells()[s].g) * T_[s];
    return A;
  }
  template <class Coeff>
  std::pair<Mat, Mat> combine_complex(Coeff&& c, bool skip_zero) const {
    Mat re = Mat::Zero(rank(), rank()), im = Mat::Zero(rank(), rank());
    for (std::size_t s = skip_zero ? 1 : 0; s < T_.size(); ++s) {
      const Complex w = c(spectrum_->shells()[s].g);
      re.noalias() += w.real() * T_[s];
      im.noalias() += w.imag() * T_[s];
    }
    return {re, im};
  }

  // G - Y Y^* in the mode basis; only sensible for small spectra.
  CMat dense_matrix() const;

private:
  friend LowRankDeformation assemble_deformation(const TestFunction&,
                                                 std::shared_ptr<const LatticeSpectrum>,
                                                 const AssemblyOptions&);
  std::shared_ptr<const LatticeSpectrum> spectrum_;
  QuadratureRule quad_;
  Vec v_;
  Mat Yr_, Yi_;
  std::vector<Mat> T_;
  double quad_delta_ = 0.0;
  BallOrder order_{};
};

LowRankDeformation assemble_deformation(const TestFunction& f,
                                        std::shared_ptr<const LatticeSpectrum> spectrum,
                                        const AssemblyOptions& options = {});
LowRankDeformation assemble_deformation(const TestFunction& f, const ModelParams& params,
                                        const AssemblyOptions& options = {});

// Throws PreconditionError unless supp f lies inside [-L/2, L/2]^d.
void require_support_inside(const TestFunction& f, const ModelParams& params);

struct TopEigenpair {
  double value = 1.0;   // g~_0
  double overlap = 1.0; // |(phi~_0, phi_0)|
  // upper bound for the second eigenvalue of G~ (min-max gives g_1)
  double next_bound = 0.0;
};

// Largest eigenvalue of G~ in (g_1, 1) from the secular equation
// det(I - sum_s T_s / (g_s - mu)) = 0, with its overlap with the zero mode.
TopEigenpair top_deformed_eigenpair(const LowRankDeformation& def);

// h_m = L^{-d} int e^{-f(x)} e^{-2 pi i m.x / L} dx on the cube |m_i| <= kmax.
class FourierCoefficients {
public:
  FourierCoefficients(int d, int kmax, CVec values) : d_(d), kmax_(kmax), values_(std::move(values)) {}
  int kmax() const { return kmax_; }
  const CVec& values() const { return values_; }
  Eigen::Index index(const Eigen::Ref<const IVec>& m) const;
  Complex operator()(const Eigen::Ref<const IVec>& m) const { return values_(index(m)); }

private:
  int d_;
  int kmax_;
  CVec values_;
};

FourierCoefficients fourier_coeffs_exp_minus_f(const TestFunction& f, const ModelParams& params, int kmax);

// sqrt(g_k) h_{k-l} sqrt(g_l) over the modes of a cube spectrum.
CMat galerkin_matrix(const TestFunction& f, const LatticeSpectrum& spectrum);

// Quadrature-weighted discretization M_ij = v_i K(x_i, x_j) v_j.
struct NystromKernel {
  QuadratureRule quad;
  Vec s; // multiplier at the nodes: sqrt(1 - e^{-f}) or the indicator
  Vec v; // s_i sqrt(w_i)
  Mat M;
};

NystromKernel assemble_nystrom_Kf(const TestFunction& f, const ModelParams& params,
                                  const BallOrder& order = {});
NystromKernel assemble_nystrom_KLambda(const Box& box, const ModelParams& params, int nodes_per_axis);

// L^{-d} sum_{k != 0} z g_k / (1 - z g_k) e^{2 pi i k.(x - y) / L}
Complex lattice_resolvent_kernel_complex(const LatticeSpectrum& spectrum, double z,
                                         const Eigen::Ref<const Vec>& x, const Eigen::Ref<const Vec>& y);
double lattice_resolvent_kernel(const LatticeSpectrum& spectrum, double z, const Eigen::Ref<const Vec>& x,
                                const Eigen::Ref<const Vec>& y);

} // namespace becpf
