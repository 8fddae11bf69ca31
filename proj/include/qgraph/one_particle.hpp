#pragma once

#include <string>
#include <vector>

#include "qgraph/graph.hpp"

namespace qg {

// Spectral data of (P, L) needed for S(k): ker P basis diagonalising L there.
struct ScatteringData {
  int dim = 0;
  int rank_p = 0;
  CMat P;
  CMat Qk;                   // dim x r, orthonormal, columns eigenvectors of L on ker P
  std::vector<double> lam;   // eigenvalues of L on ker P (ascending)

  explicit ScatteringData(const BoundaryConditions& bc);
  CMat S(cplx k) const;
};

// S(k) = -P - (L + ik P_perp)^{-1}(L - ik P_perp), inverted on ker P.
CMat scattering_matrix(const BoundaryConditions& bc, cplx k);

// 2E x 2E block anti-diagonal matrix of phases exp(ik l_e).
CMat metric_matrix(const MetricGraph& g, cplx k);

struct SecularEvaluation {
  cplx k;
  CMat S;
  CMat U;
  cplx value;  // det(1 - U(k))
};

SecularEvaluation evaluate_secular(const MetricGraph& g, const BoundaryConditions& bc, cplx k);
cplx secular_value(const MetricGraph& g, const BoundaryConditions& bc, cplx k);

// Cached secular function with its real-on-the-axis normalisation
// zeta(k) = exp(-i Theta(k)/2) det(1 - S T), Theta the phase of det(-U).
class SecularFunction {
 public:
  SecularFunction(const MetricGraph& g, const BoundaryConditions& bc);
  cplx value(cplx k) const;
  cplx phase_theta(cplx k) const;
  cplx proxy(cplx k) const;
  const ScatteringData& data() const { return sd_; }

 private:
  MetricGraph g_;
  ScatteringData sd_;
  double total_;
};

enum class Source { Secular, Oracle, Bethe, Direct };
std::string to_string(Source s);

struct Eigenvalue {
  double lambda = 0.0;
  double k = 0.0;  // sqrt(lambda) for lambda >= 0, kappa with lambda = -kappa^2 otherwise
  int multiplicity = 1;
  double residual = 0.0;
  Source source = Source::Secular;
};

struct SpectrumResult {
  std::vector<Eigenvalue> eigenvalues;
  double k_min = 0.0;
  double k_max = 0.0;
  double grid = 0.0;
  std::vector<std::string> warnings;

  int count() const;  // with multiplicity
  std::vector<double> expanded() const;  // lambdas repeated by multiplicity
};

struct ScanOptions {
  double grid = 0.0;    // 0 -> pi / (8 * total length)
  double tol = 1e-10;   // acceptance |f| at a root
  double k_min = 0.0;   // 0 -> grid / 2
};

// Positive eigenvalues k^2 with k in (k_min, k_max].
SpectrumResult scan_spectrum(const MetricGraph& g, const BoundaryConditions& bc, double k_max,
                             const ScanOptions& opt = {});

// Negative eigenvalues -kappa^2, kappa in (0, kappa_max].
std::vector<Eigenvalue> negative_spectrum(const MetricGraph& g, const BoundaryConditions& bc,
                                          double kappa_max, double grid = 0.0);

// The pole-free real function whose zeros give negative eigenvalues:
// (-1)^r prod_j (lambda_j - kappa) det(1 - S(i kappa) T(i kappa)).
cplx negative_secular(const MetricGraph& g, const ScatteringData& sd, cplx kappa);

// A bound on kappa for any negative eigenvalue -kappa^2.
double kappa_bound(const MetricGraph& g, const BoundaryConditions& bc);

// Dimension of the kernel of -Laplacian (eigenvalue zero).
int zero_multiplicity(const MetricGraph& g, const BoundaryConditions& bc);

// Negative, zero and positive eigenvalues up to k_max, ordered.
SpectrumResult full_spectrum(const MetricGraph& g, const BoundaryConditions& bc, double k_max,
                             const ScanOptions& opt = {});

// Zeros of det(1 - U) inside the thin rectangle around [a, b] on the real axis.
int count_zeros(const MetricGraph& g, const BoundaryConditions& bc, double a, double b,
                double eps = 1e-4);

struct WeylFit {
  double slope = 0.0;
  double expected = 0.0;  // total length / pi
  double rel_error = 0.0;
  int n_used = 0;
};

// Least-squares slope of N(k) against k over the positive eigenvalues.
WeylFit weyl_fit(const SpectrumResult& r, const MetricGraph& g, int max_count = 0);

}  // namespace qg
