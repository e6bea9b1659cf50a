#pragma once

#include "becpf/assembly.hpp"
#include "becpf/contour.hpp"
#include "becpf/fugacity.hpp"

#include <optional>
#include <vector>

namespace becpf {

struct LimitOptions {
  BallOrder order{};
  // second Nystrom rule used to report the discretization change; unset skips it
  std::optional<BallOrder> check{BallOrder{12, 12, 24}};
};

// exp(-(rho - rho_c) q) / Det(1 + K_f), q = (sqrt(1 - e^{-f}), (1 + K_f)^{-1} sqrt(1 - e^{-f}))
struct LimitLaplaceResult {
  double rho_excess = 0.0;           // rho - rho_c
  double condensate_exponent = 0.0;  // q
  double boson_det = 1.0;            // Det(1 + K_f)
  double log_boson_det = 0.0;
  double value = 1.0;
  Eigen::Index nodes = 0;
  Eigen::Index check_nodes = 0;
  double exponent_delta = 0.0;  // relative change of q under the check rule
  double log_det_delta = 0.0;   // absolute change of log Det(1 + K_f)

  double condensate_factor() const { return std::exp(-rho_excess * condensate_exponent); }
  double boson_factor() const { return 1.0 / boson_det; }
  // the same limit at another density
  double at_density(double rho, double rho_c) const {
    return std::exp(-(rho - rho_c) * condensate_exponent - log_boson_det);
  }
};

LimitLaplaceResult limit_laplace(const ModelParams& params, const TestFunction& f, const LimitOptions& options = {});

struct Lemma9Terms {
  double log_det_plain = 0.0;     // log Det(1 - z0 QGQ) - log Det(1 - QGQ)
  double plain_linear = 0.0;      // (1 - z0)(N - p0) / z0
  double log_det_deformed = 0.0;  // log Det(1 - z~0 QG~Q) - log Det(1 - QG~Q)
  double deformed_linear = 0.0;   // (1 - z~0)(N - p~0) / z~0
  double log_det_ratio = 0.0;     // log Det(1 - QG~Q) - log Det(1 - QGQ)
  double exponent = 0.0;          // -(z~0 - z0) N / z0 + plain_linear - deformed_linear
  double plain_bound = 0.0;       // (1 - z0)^2 sum_{j>=1} g_j / (1 - g_j)^2, dominates the plain residual
  double p0 = 0.0, ptilde0 = 0.0;

  double plain_residual() const { return log_det_plain - plain_linear; }
  double deformed_residual() const { return log_det_deformed - deformed_linear; }
};

Lemma9Terms lemma9_terms(const LowRankDeformation& def, const FugacityPair& fp);

struct SweepRow {
  double L = 0.0;
  std::int64_t N = 0;
  double rho_N = 0.0;          // N / L^d
  FiniteLaplaceResult finite;
  double limit = 0.0;          // at the nominal density
  double limit_matched = 0.0;  // at rho_N
  double gap = 0.0, rel_gap = 0.0;
  double gap_matched = 0.0, rel_gap_matched = 0.0;
  double gtilde0 = 0.0, overlap = 0.0;
  FugacityPair fugacity;
  double gap_window_ratio = 0.0;  // L^d (1 - g~0) / |1 - e^{-f}|_1
  double z0_ratio = 0.0;          // L^d (1 - z0)(rho - rho_c)
  double ztilde_ratio = 0.0;      // (z~0 - z0) / (1 - g~0)
  double det_ratio_factor = 0.0;  // Det(1 - QG~Q) / Det(1 - QGQ) / Det(1 + K_f)
  Lemma9Terms lemma9;
  double seconds = 0.0;
};

struct SweepOptions {
  AssemblyOptions assembly{};
  LimitOptions limit{};
  ContourOptions contour{};
};

struct ConvergenceTable {
  LimitLaplaceResult limit;
  std::vector<SweepRow> rows;
};

ConvergenceTable convergence_sweep(const ModelParams& base, const TestFunction& f, const std::vector<double>& Ls,
                                   const SweepOptions& options = {});

} // namespace becpf
