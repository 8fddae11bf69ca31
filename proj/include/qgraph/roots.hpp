#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace qg {

// Root of f on [a, b]; requires a sign change. Converges to full double precision.
double bracket_root(const std::function<double(double)>& f, double a, double b);

// Minimiser of f on [a, b] (Brent's parabolic/golden-section search).
double minimise(const std::function<double(double)>& f, double a, double b);

struct Winding {
  double value = 0.0;  // total argument change / 2pi
  int rounded = 0;
  bool integral = false;  // |value - rounded| below tolerance
};

// Argument-principle winding of f around the circle |z - c| = r.
Winding winding_circle(const std::function<std::complex<double>(std::complex<double>)>& f,
                       std::complex<double> c, double r);

// Winding of f around the closed polygon through the given vertices (counter-clockwise).
Winding winding_polygon(const std::function<std::complex<double>(std::complex<double>)>& f,
                        const std::vector<std::complex<double>>& vertices);

struct RealZero {
  double x = 0.0;
  int multiplicity = 1;
  double residual = 0.0;  // |g(x)|
};

struct ZeroScanOptions {
  double grid = 1e-2;
  double accept = 1e-10;    // |g| bound at an accepted zero
  int refine_levels = 3;    // local 10x grid refinements around suspicious minima
};

// Zeros of g on [a, b], where g is analytic near the real axis and real on it.
// Odd-order zeros are bracketed by sign changes; even-order ones are found as
// minima of |g|. Multiplicity is the winding number of g on a small circle.
std::vector<RealZero> find_real_zeros(
    const std::function<std::complex<double>(std::complex<double>)>& g, double a, double b,
    const ZeroScanOptions& opt);

}  // namespace qg
