#pragma once

#include <functional>
#include <stdexcept>

namespace aeat {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Modified Bessel function of the second kind, K_nu(x), from its integral
// representation int_0^inf exp(-x cosh t) cosh(nu t) dt evaluated with a
// step-halving trapezoidal rule on an adaptively truncated range.
double bessel_k(double nu, double x);

double erf(double x);
// Gaussian tail probability P(N(0,1) > x).
double gaussian_q(double x);

// Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double rel_tol = 1e-10, double abs_tol = 1e-14, int max_depth = 40);

// Non-adaptive 15-point Kronrod rule on [a, b].
double integrate_gk15(const std::function<double(double)>& f, double a, double b);

}  // namespace aeat
