#pragma once

#include "becpf/test_function.hpp"
#include "becpf/types.hpp"

#include <cstdint>
#include <vector>

namespace becpf {

struct PointConfiguration {
  Mat points; // d x n
  Box window;

  Eigen::Index size() const { return points.cols(); }
  // <f, xi> = sum_j f(x_j)
  double pair(const TestFunction& f) const;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
};

// E exp(-(phi + c)^* D (phi + c)) for phi ~ CN(0, K), D = diag(d), two ways:
// completing the square against K^{-1} (needs K invertible) and through
// det(1 + D^{1/2} K D^{1/2}) with the resolvent quadratic form.
struct GaussianIdentityCheck {
  double direct_log = 0.0;
  double resolvent_log = 0.0;
  double relative_error() const { return std::abs(std::expm1(direct_log - resolvent_log)); }
};
GaussianIdentityCheck gaussian_identity(const Mat& K, const Vec& d, double c);
// Runs the check on random full-rank PSD kernels; returns the largest relative error.
double gaussian_identity_suite(int trials, int n, std::uint64_t seed);

struct SamplerOptions {
  // cells have diameter at most this times sqrt(beta)
  double cell_diameter = 0.25;
  // eigenvalues below this fraction of the largest are dropped from the factor
  double eigen_floor = 1e-13;
};

// Limit field as a Cox process with intensity |phi(x) + c|^2 on a cell grid,
// phi complex Gaussian with covariance K, c^2 = rho - rho_c.
class FieldSampler {
public:
  FieldSampler(const ModelParams& params, const Box& window, const SamplerOptions& options = {});

  const Box& window() const { return window_; }
  const Mat& nodes() const { return nodes_; } // d x cells, cell centres
  const Mat& covariance() const { return cov_; }
  double cell_volume() const { return cell_volume_; }
  const Eigen::VectorXi& cells_per_axis() const { return per_axis_; }
  int factor_rank() const { return static_cast<int>(factor_.cols()); }
  double shift() const { return c_; }

  // Draw i of the stream with the given seed; independent of evaluation order.
  CVec draw_field(std::uint64_t seed, std::uint64_t index) const;
  PointConfiguration draw(std::uint64_t seed, std::uint64_t index) const;
  std::vector<PointConfiguration> draw_many(std::uint64_t seed, std::uint64_t count) const;

private:
  PointConfiguration scatter(const CVec& phi, std::uint64_t seed, std::uint64_t index) const;

  ModelParams params_;
  Box window_;
  Eigen::VectorXi per_axis_;
  Vec cell_side_;
  double cell_volume_ = 0.0;
  Mat nodes_;
  Mat cov_;
  Mat factor_; // cells x rank, cov ~ factor factor^T
  double c_ = 0.0;
};

PointConfiguration sample_limit_field(const ModelParams& params, const Box& window, std::uint64_t seed);

Estimate empirical_laplace(const std::vector<PointConfiguration>& samples, const TestFunction& f);
// points per unit volume of the window
Estimate empirical_intensity(const std::vector<PointConfiguration>& samples);

struct McmcOptions {
  long steps = 100000;
  long burn_in = 10000;
  long thin = 10;
  double step = 0.5; // proposal half-width in units of sqrt(beta)
};

struct McmcChain {
  std::vector<PointConfiguration> samples;
  double acceptance = 0.0;
};

// Metropolis chain for the density per[G_L(x_i, x_j)] on the torus, N <= 10.
McmcChain mcmc_finite_chain(const ModelParams& params, int N, const McmcOptions& options, std::uint64_t seed);
PointConfiguration mcmc_finite_sample(const ModelParams& params, int N, long steps, std::uint64_t seed);

// Mean and batch-means standard error of a correlated series.
Estimate batch_means(const std::vector<double>& series, int batches = 50);

} // namespace becpf
