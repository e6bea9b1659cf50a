#include "becpf/quadrature.hpp"

#include "becpf/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <vector>

namespace becpf {

Rule1D gauss_legendre(int n, double a, double b) {
  if (n < 1) throw PreconditionError("gauss_legendre: n must be positive");
  Rule1D rule{Vec(n), Vec(n)};
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // refresh the derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = (n == 1) ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes(i) = mid - half * x;
    rule.nodes(n - 1 - i) = mid + half * x;
    rule.weights(i) = rule.weights(n - 1 - i) = half * w;
  }
  return rule;
}

Rule1D gauss_gegenbauer(int n, double alpha) {
  if (alpha == 0.0) return gauss_legendre(n);
  if (!(alpha > -1.0)) throw PreconditionError("gauss_gegenbauer: alpha must exceed -1");
  const double lambda = alpha + 0.5;
  Mat J = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k * (k + 2.0 * lambda - 1.0) / (4.0 * (k + lambda) * (k + lambda - 1.0));
    J(k, k - 1) = J(k - 1, k) = std::sqrt(b);
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  const double mu0 = std::sqrt(std::numbers::pi) * std::tgamma(alpha + 1.0) / std::tgamma(alpha + 1.5);
  Rule1D rule{es.eigenvalues(), Vec(n)};
  for (int i = 0; i < n; ++i) rule.weights(i) = mu0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i);
  return rule;
}

namespace {

// Kronrod 15 / Gauss 7 abscissae and weights on [-1, 1].
constexpr double xgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                           0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                           0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                           0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                           0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                           0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                           0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                          0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * wgk[7], g = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * xgk[j];
    const double s = f(c - dx) + f(c + dx);
    k += wgk[j] * s;
    if (j % 2 == 1) g += wg[j / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

} // namespace

Integral integrate(const std::function<double(double)>& f, double a, double b, double rel_tol,
                   double abs_tol, int max_intervals) {
  if (a == b) return {};
  std::priority_queue<Panel> heap;
  Panel p = gk15(f, a, b);
  heap.push(p);
  double total = p.value, err = p.error;
  int evals = 15;
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (static_cast<int>(heap.size()) >= max_intervals)
      throw QuadratureError("adaptive quadrature did not reach tolerance");
    Panel worst = heap.top();
    heap.pop();
    const double m = 0.5 * (worst.a + worst.b);
    const Panel l = gk15(f, worst.a, m), r = gk15(f, m, worst.b);
    evals += 30;
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    // re-add from scratch now and then to shed cancellation in the running sums
    if (heap.size() % 64 == 0) {
      auto copy = heap;
      total = err = 0.0;
      while (!copy.empty()) {
        total += copy.top().value;
        err += copy.top().error;
        copy.pop();
      }
    }
  }
  return {total, err, evals};
}

Integral integrate_to_infinity(const std::function<double(double)>& f, double a, double rel_tol,
                               double abs_tol, int max_intervals) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double s = 1.0 - t;
    return f(a + t / s) / (s * s);
  };
  return integrate(g, 0.0, 1.0, rel_tol, abs_tol, max_intervals);
}

Chebyshev::Chebyshev(const std::function<double(double)>& f, double a, double b, double tol,
                     int max_degree)
    : a_(a), b_(b) {
  for (int n = 16;; n *= 2) {
    // values at Chebyshev-Lobatto points, then a direct cosine transform
    Vec vals(n + 1);
    for (int j = 0; j <= n; ++j) {
      const double x = std::cos(std::numbers::pi * j / n);
      vals(j) = f(0.5 * (a + b) + 0.5 * (b - a) * x);
    }
    Vec c(n + 1);
    for (int k = 0; k <= n; ++k) {
      double s = 0.0;
      for (int j = 0; j <= n; ++j) {
        const double w = (j == 0 || j == n) ? 0.5 : 1.0;
        s += w * vals(j) * std::cos(std::numbers::pi * k * j / n);
      }
      c(k) = s * 2.0 / n;
    }
    c(0) *= 0.5;
    c(n) *= 0.5;
    const double scale = c.cwiseAbs().maxCoeff();
    const double tail = c.tail(4).cwiseAbs().maxCoeff();
    if (tail <= tol * scale || scale == 0.0 || 2 * n > max_degree) {
      int keep = n;
      while (keep > 0 && std::abs(c(keep)) <= 0.25 * tol * scale) --keep;
      coeffs_ = c.head(keep + 1);
      if (tail > tol * scale && scale != 0.0)
        throw QuadratureError("Chebyshev interpolant did not converge");
      return;
    }
  }
}

double Chebyshev::operator()(double x) const {
  const double t = (2.0 * x - a_ - b_) / (b_ - a_);
  double b1 = 0.0, b2 = 0.0;
  for (Eigen::Index k = coeffs_.size() - 1; k >= 1; --k) {
    const double b0 = 2.0 * t * b1 - b2 + coeffs_(k);
    b2 = b1;
    b1 = b0;
  }
  return t * b1 - b2 + coeffs_(0);
}

template <class T>
static T pairwise(const T* x, std::size_t n) {
  if (n <= 8) {
    T s{};
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(x, h) + pairwise(x + h, n - h);
}

double pairwise_sum(const double* x, std::size_t n) { return pairwise(x, n); }
Complex pairwise_sum(const Complex* x, std::size_t n) { return pairwise(x, n); }

} // namespace becpf
