#include "becpf/test_function.hpp"

#include "becpf/errors.hpp"
#include "becpf/quadrature.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace becpf {

using std::numbers::pi;

namespace {

double sphere_area(int d) { return 2.0 * std::pow(pi, 0.5 * d) / std::tgamma(0.5 * d); }

const Rule1D& cached_gl(int n) {
  thread_local std::map<int, Rule1D> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_legendre(n, 0.0, 1.0)).first;
  return it->second;
}

} // namespace

TestFunction::TestFunction(int d, std::vector<Bump> bumps) : d_(d) {
  if (d < 1) throw PreconditionError("test function dimension must be positive");
  for (auto& b : bumps) {
    if (b.x0.size() != d) throw PreconditionError("bump centre has the wrong dimension");
    if (!(b.r > 0.0)) throw PreconditionError("bump radius must be positive");
    if (!(b.a >= 0.0) || !std::isfinite(b.a)) throw PreconditionError("bump amplitude must be finite and non-negative");
    if (b.a > 0.0) bumps_.push_back(std::move(b));
  }
  for (std::size_t i = 0; i < bumps_.size(); ++i)
    for (std::size_t j = i + 1; j < bumps_.size(); ++j)
      if ((bumps_[i].x0 - bumps_[j].x0).norm() < bumps_[i].r + bumps_[j].r)
        throw PreconditionError("bump supports must be disjoint");
  norm_ = integrate([](double f) { return -std::expm1(-f); });
}

double TestFunction::operator()(const Eigen::Ref<const Vec>& x) const {
  for (const auto& b : bumps_) {
    const double v = b(x);
    if (v > 0.0) return v;
  }
  return 0.0;
}

Box TestFunction::bounding_box() const {
  if (bumps_.empty()) return {Vec::Zero(d_), Vec::Zero(d_)};
  Box box{bumps_[0].x0.array() - bumps_[0].r, bumps_[0].x0.array() + bumps_[0].r};
  for (const auto& b : bumps_) {
    box.lower = box.lower.cwiseMin((b.x0.array() - b.r).matrix());
    box.upper = box.upper.cwiseMax((b.x0.array() + b.r).matrix());
  }
  return box;
}

double TestFunction::lipschitz() const {
  // |d/drho a (1 - rho^2/r^2)^2| peaks at rho = r / sqrt 3
  double lip = 0.0;
  for (const auto& b : bumps_) lip = std::max(lip, 8.0 * b.a / (3.0 * std::sqrt(3.0) * b.r));
  return lip;
}

double TestFunction::support_diameter() const {
  double diam = 0.0;
  for (std::size_t i = 0; i < bumps_.size(); ++i)
    for (std::size_t j = i; j < bumps_.size(); ++j)
      diam = std::max(diam, (bumps_[i].x0 - bumps_[j].x0).norm() + bumps_[i].r + bumps_[j].r);
  return diam;
}

double TestFunction::integrate(const std::function<double(double)>& phi) const {
  double total = 0.0;
  for (const auto& b : bumps_) {
    auto integrand = [&](double rho) { return std::pow(rho, d_ - 1) * phi(b.radial(rho)); };
    // large amplitudes build a boundary layer where a (1 - rho^2/r^2)^2 ~ 1;
    // breakpoints at 1 - rho^2/r^2 = 2^{-j} resolve it
    const int layers = 2 + static_cast<int>(std::ceil(std::log2(std::max(1.0, std::sqrt(b.a)))));
    double lo = 0.0, part = 0.0;
    for (int j = 1; j <= layers + 1; ++j) {
      const double hi = (j <= layers) ? b.r * std::sqrt(1.0 - std::ldexp(1.0, -j)) : b.r;
      part += becpf::integrate(integrand, lo, hi, 1e-14, 1e-17 * std::pow(b.r, d_)).value;
      lo = hi;
    }
    total += sphere_area(d_) * part;
  }
  return total;
}

double TestFunction::radial_transform(const Bump& b, double kappa) const {
  const int n = 48 + static_cast<int>(std::ceil(kappa * b.r));
  const Rule1D& gl = cached_gl(n);
  double s = 0.0;
  if (kappa == 0.0) {
    for (int i = 0; i < n; ++i) {
      const double rho = b.r * gl.nodes(i);
      s += gl.weights(i) * std::pow(rho, d_ - 1) * -std::expm1(-b.radial(rho));
    }
    return sphere_area(d_) * b.r * s;
  }
  const double nu = 0.5 * d_ - 1.0;
  for (int i = 0; i < n; ++i) {
    const double rho = b.r * gl.nodes(i);
    const double bessel = (d_ == 3) ? std::sin(kappa * rho) * std::sqrt(2.0 / (pi * kappa * rho))
                                    : std::cyl_bessel_j(nu, kappa * rho);
    s += gl.weights(i) * std::pow(rho, 0.5 * d_) * bessel * -std::expm1(-b.radial(rho));
  }
  return std::pow(2.0 * pi, 0.5 * d_) * std::pow(kappa, -nu) * b.r * s;
}

Complex TestFunction::transform_one_minus_exp(const Eigen::Ref<const Vec>& q) const {
  const double kappa = q.norm();
  Complex s = 0.0;
  for (const auto& b : bumps_) s += std::polar(radial_transform(b, kappa), -q.dot(b.x0));
  return s;
}

QuadratureRule TestFunction::support_rule(const BallOrder& order) const {
  std::vector<QuadratureRule> parts;
  Eigen::Index m = 0;
  for (const auto& b : bumps_) {
    parts.push_back(ball_rule(d_, b.x0, b.r, order));
    m += parts.back().size();
  }
  QuadratureRule rule{Mat(d_, m), Vec(m)};
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    rule.nodes.middleCols(at, p.size()) = p.nodes;
    rule.weights.segment(at, p.size()) = p.weights;
    at += p.size();
  }
  return rule;
}

TestFunction TestFunction::translated(const Eigen::Ref<const Vec>& shift) const {
  auto moved = bumps_;
  for (auto& b : moved) b.x0 += shift;
  return TestFunction(d_, moved);
}

TestFunction TestFunction::scaled(double amplitude_factor) const {
  auto out = bumps_;
  for (auto& b : out) b.a *= amplitude_factor;
  return TestFunction(d_, out);
}

double eval_f(const TestFunction& f, const Eigen::Ref<const Vec>& x) { return f(x); }
double one_minus_exp_norm(const TestFunction& f) { return f.one_minus_exp_norm(); }

QuadratureRule ball_rule(int d, const Eigen::Ref<const Vec>& x0, double r, const BallOrder& order) {
  if (d < 2) throw PreconditionError("ball_rule needs d >= 2");
  const Rule1D radial = gauss_legendre(order.radial, 0.0, r);
  // polar angle j (1-based) carries sin^{d-1-j}; in t = cos(theta) that is (1-t^2)^{(d-2-j)/2}
  std::vector<Rule1D> polar;
  for (int j = 1; j <= d - 2; ++j) {
    polar.push_back(gauss_gegenbauer(order.polar, 0.5 * (d - 2 - j)));
  }
  const int na = order.azimuthal;
  Eigen::Index m = static_cast<Eigen::Index>(order.radial) * na;
  for (int j = 0; j < d - 2; ++j) m *= order.polar;
  QuadratureRule rule{Mat(d, m), Vec(m)};

  std::vector<int> idx(d - 2, 0);
  Eigen::Index col = 0;
  Vec omega(d);
  for (Eigen::Index dir = 0; dir < m / order.radial; ++dir) {
    // decode polar indices and the azimuth index from dir
    Eigen::Index rest = dir;
    const int ia = static_cast<int>(rest % na);
    rest /= na;
    for (int j = 0; j < d - 2; ++j) {
      idx[j] = static_cast<int>(rest % order.polar);
      rest /= order.polar;
    }
    double w = 2.0 * pi / na;
    double sprod = 1.0;
    for (int j = 0; j < d - 2; ++j) {
      const double t = polar[j].nodes(idx[j]);
      omega(j) = sprod * t;
      sprod *= std::sqrt(std::max(0.0, 1.0 - t * t));
      w *= polar[j].weights(idx[j]);
    }
    const double phi = 2.0 * pi * (ia + 0.5) / na;
    omega(d - 2) = sprod * std::cos(phi);
    omega(d - 1) = sprod * std::sin(phi);
    for (int ir = 0; ir < order.radial; ++ir) {
      const double rho = radial.nodes(ir);
      rule.nodes.col(col) = x0 + rho * omega;
      rule.weights(col) = w * radial.weights(ir) * std::pow(rho, d - 1);
      ++col;
    }
  }
  return rule;
}

QuadratureRule box_rule(const Box& box, int nodes_per_axis) {
  const int d = box.dim();
  std::vector<Rule1D> axes;
  for (int i = 0; i < d; ++i) axes.push_back(gauss_legendre(nodes_per_axis, box.lower(i), box.upper(i)));
  Eigen::Index m = 1;
  for (int i = 0; i < d; ++i) m *= nodes_per_axis;
  QuadratureRule rule{Mat(d, m), Vec(m)};
  for (Eigen::Index c = 0; c < m; ++c) {
    Eigen::Index rest = c;
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const int k = static_cast<int>(rest % nodes_per_axis);
      rest /= nodes_per_axis;
      rule.nodes(i, c) = axes[i].nodes(k);
      w *= axes[i].weights(k);
    }
    rule.weights(c) = w;
  }
  return rule;
}

} // namespace becpf
