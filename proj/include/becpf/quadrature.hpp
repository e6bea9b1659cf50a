#pragma once

#include "becpf/types.hpp"

#include <functional>

namespace becpf {

struct Rule1D {
  Vec nodes;
  Vec weights;
};

// n-point Gauss-Legendre rule on [a, b].
Rule1D gauss_legendre(int n, double a = -1.0, double b = 1.0);

// n-point rule on [-1, 1] for the weight (1 - t^2)^alpha, alpha > -1
// (Golub-Welsch on the Gegenbauer recurrence).
Rule1D gauss_gegenbauer(int n, double alpha);

struct Integral {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

// Globally adaptive 7/15-point Gauss-Kronrod. Throws QuadratureError when the
// tolerance max(abs_tol, rel_tol |I|) is not met within max_intervals.
Integral integrate(const std::function<double(double)>& f, double a, double b,
                   double rel_tol = 1e-12, double abs_tol = 0.0, int max_intervals = 4000);

// Same on [a, inf) through x = a + t / (1 - t).
Integral integrate_to_infinity(const std::function<double(double)>& f, double a,
                               double rel_tol = 1e-12, double abs_tol = 0.0,
                               int max_intervals = 4000);

// Chebyshev interpolant on [a, b]; the degree doubles until the trailing
// coefficients fall below tol times the largest one.
class Chebyshev {
public:
  Chebyshev() = default;
  Chebyshev(const std::function<double(double)>& f, double a, double b, double tol = 1e-15,
            int max_degree = 4096);

  double operator()(double x) const;
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  double lower() const { return a_; }
  double upper() const { return b_; }

private:
  double a_ = 0.0;
  double b_ = 1.0;
  Vec coeffs_;
};

// Sum in pairs so that the result does not depend on how the terms were
// produced (threads, chunking).
double pairwise_sum(const double* x, std::size_t n);
Complex pairwise_sum(const Complex* x, std::size_t n);

} // namespace becpf
