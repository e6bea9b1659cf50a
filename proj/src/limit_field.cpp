#include "becpf/limit_field.hpp"

#include "becpf/errors.hpp"
#include "becpf/fredholm.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace becpf {

LimitLaplaceResult limit_laplace(const ModelParams& params, const TestFunction& f, const LimitOptions& options) {
  params.validate();
  const double rho_c = critical_density(params.d, params.beta);
  const double rho = params.density();
  if (!(rho > rho_c))
    throw SubcriticalDensityError("limit needs rho > rho_c (rho = " + std::to_string(rho) +
                                  ", rho_c = " + std::to_string(rho_c) + ")");
  LimitLaplaceResult r;
  r.rho_excess = rho - rho_c;
  if (f.is_zero()) return r;

  const NystromKernel K = assemble_nystrom_Kf(f, params, options.order);
  r.nodes = K.M.rows();
  r.condensate_exponent = condensate_quadratic_form(K);
  r.log_boson_det = det_one_plus_Kf(K).log_abs;
  if (options.check) {
    const NystromKernel K2 = assemble_nystrom_Kf(f, params, *options.check);
    r.check_nodes = K2.M.rows();
    r.exponent_delta = std::abs(condensate_quadratic_form(K2) / r.condensate_exponent - 1.0);
    r.log_det_delta = std::abs(det_one_plus_Kf(K2).log_abs - r.log_boson_det);
  }
  r.boson_det = std::exp(r.log_boson_det);
  r.value = std::exp(-r.rho_excess * r.condensate_exponent - r.log_boson_det);
  return r;
}

Lemma9Terms lemma9_terms(const LowRankDeformation& def, const FugacityPair& fp) {
  const DiagonalSpectrum g = def.spectrum().diagonal();
  const double N = static_cast<double>(fp.N);
  const double z0 = fp.z0, zt = fp.ztilde0;
  Lemma9Terms t;
  t.p0 = z0 / (1.0 - z0);
  t.ptilde0 = zt * fp.gtilde0 / (1.0 - zt * fp.gtilde0);

  const double plain_one = det_one_minus_zG(g, 1.0, true).log_abs;
  t.log_det_plain = det_one_minus_zG(g, z0, true).log_abs - plain_one;
  t.plain_linear = (1.0 - z0) * (N - t.p0) / z0;
  t.plain_bound = (1.0 - z0) * (1.0 - z0) * def.spectrum().excited_sum(1.0, 2);

  const double deformed_one = det_one_minus_zGtilde(def, 1.0, Sector::excited).log_abs;
  t.log_det_deformed = det_one_minus_zGtilde(def, zt, Sector::excited).log_abs - deformed_one;
  t.deformed_linear = (1.0 - zt) * (N - t.ptilde0) / zt;

  t.log_det_ratio = deformed_one - plain_one;
  t.exponent = -(zt - z0) * N / z0 + t.plain_linear - t.deformed_linear;
  return t;
}

ConvergenceTable convergence_sweep(const ModelParams& base, const TestFunction& f, const std::vector<double>& Ls,
                                   const SweepOptions& options) {
  ConvergenceTable table;
  table.limit = limit_laplace(base, f, options.limit);
  const double rho_c = critical_density(base.d, base.beta);
  const double rho = base.density();
  const double norm = f.one_minus_exp_norm();

  for (double L : Ls) {
    const auto start = std::chrono::steady_clock::now();
    const ModelParams p = base.with_L(L);
    SweepRow row;
    row.L = L;
    row.N = p.particle_count();
    const double Ld = p.volume();
    row.rho_N = static_cast<double>(row.N) / Ld;

    const auto def = assemble_deformation(f, p, options.assembly);
    const TopEigenpair top = top_deformed_eigenpair(def);
    row.gtilde0 = top.value;
    row.overlap = top.overlap;
    row.fugacity = solve_fugacities(def, row.N, top);
    row.finite = finite_laplace(def, row.N, row.fugacity, options.contour);

    row.limit = table.limit.value;
    row.limit_matched = table.limit.at_density(row.rho_N, rho_c);
    row.gap = std::abs(row.finite.value - row.limit);
    row.rel_gap = row.gap / row.limit;
    row.gap_matched = std::abs(row.finite.value - row.limit_matched);
    row.rel_gap_matched = row.gap_matched / row.limit_matched;

    row.gap_window_ratio = norm > 0.0 ? Ld * (1.0 - row.gtilde0) / norm : 0.0;
    row.z0_ratio = Ld * (1.0 - row.fugacity.z0) * (rho - rho_c);
    row.ztilde_ratio = row.gtilde0 < 1.0 ? (row.fugacity.ztilde0 - row.fugacity.z0) / (1.0 - row.gtilde0) : 0.0;
    row.lemma9 = lemma9_terms(def, row.fugacity);
    row.det_ratio_factor = std::exp(row.lemma9.log_det_ratio - table.limit.log_boson_det);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    table.rows.push_back(row);
  }
  return table;
}

} // namespace becpf
