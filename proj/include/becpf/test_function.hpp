#pragma once

#include "becpf/types.hpp"

#include <functional>
#include <vector>

namespace becpf {

// f(x) = a max(0, 1 - |x - x0|^2 / r^2)^2
struct Bump {
  double a = 1.0;
  Vec x0;
  double r = 1.0;

  double operator()(const Eigen::Ref<const Vec>& x) const {
    const double s = 1.0 - (x - x0).squaredNorm() / (r * r);
    return s > 0.0 ? a * s * s : 0.0;
  }
  // value at distance rho from the centre
  double radial(double rho) const {
    const double s = 1.0 - rho * rho / (r * r);
    return s > 0.0 ? a * s * s : 0.0;
  }
};

// Nodes (d x m) and weights of a quadrature rule.
struct QuadratureRule {
  Mat nodes;
  Vec weights;

  Eigen::Index size() const { return weights.size(); }
};

// Node counts of the product rule on one ball: radial x polar^(d-2) x azimuthal.
struct BallOrder {
  int radial = 10;
  int polar = 10;
  int azimuthal = 20;

  BallOrder refined() const { return {radial + radial / 2, polar + polar / 2, azimuthal + azimuthal / 2}; }
};

// Sum of bumps with pairwise disjoint supports.
class TestFunction {
public:
  TestFunction() = default;
  TestFunction(int d, std::vector<Bump> bumps);
  static TestFunction zero(int d) { return TestFunction(d, {}); }
  static TestFunction single(int d, double a = 1.0, double r = 1.0) {
    return TestFunction(d, {Bump{a, Vec::Zero(d), r}});
  }

  int dim() const { return d_; }
  const std::vector<Bump>& bumps() const { return bumps_; }
  bool is_zero() const { return bumps_.empty(); }

  double operator()(const Eigen::Ref<const Vec>& x) const;
  double one_minus_exp(const Eigen::Ref<const Vec>& x) const { return -std::expm1(-(*this)(x)); }
  Box bounding_box() const;
  // |1 - e^{-f}|_1
  double one_minus_exp_norm() const { return norm_; }
  // Lipschitz constant of f from the closed form.
  double lipschitz() const;
  // Largest distance between two points of the support.
  double support_diameter() const;

  // integral of phi(f(x)) dx over R^d, for phi(0) = 0, by radial quadrature
  double integrate(const std::function<double(double)>& phi) const;
  // integral of (1 - e^{-f(x)}) e^{-i q.x} dx
  Complex transform_one_minus_exp(const Eigen::Ref<const Vec>& q) const;
  // radial part of the above for one bump centred at the origin
  double radial_transform(const Bump& b, double kappa) const;

  // Product rule covering supp f (one ball rule per bump).
  QuadratureRule support_rule(const BallOrder& order) const;

  TestFunction translated(const Eigen::Ref<const Vec>& shift) const;
  TestFunction scaled(double amplitude_factor) const;

private:
  int d_ = 3;
  std::vector<Bump> bumps_;
  double norm_ = 0.0;
};

double eval_f(const TestFunction& f, const Eigen::Ref<const Vec>& x);
double one_minus_exp_norm(const TestFunction& f);

// Product rule on a ball of radius r around x0.
QuadratureRule ball_rule(int d, const Eigen::Ref<const Vec>& x0, double r, const BallOrder& order);
// Tensor Gauss-Legendre rule on a box.
QuadratureRule box_rule(const Box& box, int nodes_per_axis);

} // namespace becpf
