#pragma once

#include "becpf/assembly.hpp"
#include "becpf/spectral.hpp"
#include "becpf/types.hpp"

namespace becpf {

// A determinant kept as log|det| and a unit phase.
struct DetResult {
  double log_abs = 0.0;
  Complex phase{1.0, 0.0};

  Complex log() const { return {log_abs, std::arg(phase)}; }
  Complex value() const { return std::exp(log_abs) * phase; }

  DetResult& operator*=(const DetResult& o) {
    log_abs += o.log_abs;
    phase *= o.phase;
    phase /= std::abs(phase);
    return *this;
  }
  DetResult& operator/=(const DetResult& o) {
    log_abs -= o.log_abs;
    phase *= std::conj(o.phase);
    phase /= std::abs(phase);
    return *this;
  }
  friend DetResult operator*(DetResult a, const DetResult& b) { return a *= b; }
  friend DetResult operator/(DetResult a, const DetResult& b) { return a /= b; }
};

// prod (1 - z g)^{mult}; skip_top drops the largest value (the zero mode of a
// lattice spectrum).
DetResult det_one_minus_zG(const DiagonalSpectrum& spectrum, Complex z, bool skip_top = false);
DetResult det_one_minus_zG(const LatticeSpectrum& spectrum, Complex z);

// Full operator, or its restriction to the complement of the zero mode.
enum class Sector { full, excited };

// Det(1 - z G~) through the low-rank update. The zero mode is handled inside
// the small matrix so the evaluation stays regular at z = 1.
DetResult det_one_minus_zGtilde(const LowRankDeformation& def, Complex z, Sector sector = Sector::full);

// Tr[z A (1 - z A)^{-1}]
double trace_H(const DiagonalSpectrum& spectrum, double z, bool skip_top = false);
double trace_H(const LatticeSpectrum& spectrum, double z);
double trace_H(const LowRankDeformation& def, double z, Sector sector = Sector::full);

// Det(1 + K_f) from the Nystrom eigenvalues.
DetResult det_one_plus_Kf(const NystromKernel& K);
// v^T (I + M)^{-1} v
double condensate_quadratic_form(const NystromKernel& K);

struct PositivityReport {
  Eigen::Index nodes = 0;
  double lambda_max = 0.0;
  double resolvent_norm = 0.0;     // |R| = lambda_max / (1 + lambda_max)
  double min_resolvent_entry = 0.0; // smallest entry of R = M (I + M)^{-1}
  double min_inverse_indicator = 0.0;
  double min_eigenvalue = 0.0;

  bool norm_ok() const { return resolvent_norm < 1.0; }
  bool kernel_ok(double tol = 1e-10) const { return min_resolvent_entry >= -tol; }
  bool indicator_ok(double tol = 1e-10) const { return min_inverse_indicator >= -tol; }
  bool passed() const { return norm_ok() && kernel_ok() && indicator_ok(); }
};

// Resolvent positivity checks on the Nystrom matrix of K restricted to a box.
PositivityReport positivity_suite(const Box& box, const ModelParams& params, int nodes_per_axis = 8);

} // namespace becpf
