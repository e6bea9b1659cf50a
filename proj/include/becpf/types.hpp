#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>

namespace becpf {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using IVec = Eigen::VectorXi;
using IMat = Eigen::MatrixXi;

// Physical setup: torus [-L/2, L/2]^d at inverse temperature beta, with
// either a density or a particle number fixed.
struct ModelParams {
  int d = 3;
  double beta = 1.0;
  double L = 10.0;
  std::optional<double> rho;
  std::optional<std::int64_t> N;

  void validate() const;

  double volume() const;
  // N if given, otherwise the nearest integer to rho L^d.
  std::int64_t particle_count() const;
  // rho if given, otherwise N / L^d.
  double density() const;
  // Same model with a different box side; keeps rho, drops N.
  ModelParams with_L(double side) const;
};

// Axis-aligned box [lower, upper].
struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  double volume() const { return (upper - lower).prod(); }
  bool contains(const Eigen::Ref<const Vec>& x, double slack = 0.0) const {
    return ((x - lower).array() >= -slack).all() && ((upper - x).array() >= -slack).all();
  }
  static Box centered_cube(int d, double side) {
    return {Vec::Constant(d, -side / 2), Vec::Constant(d, side / 2)};
  }
};

} // namespace becpf
