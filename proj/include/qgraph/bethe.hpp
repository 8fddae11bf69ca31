#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qgraph/graph.hpp"

namespace qg {

enum class BetheModel { Gaudin, LiebLiniger, GraphZ };
std::string to_string(BetheModel m);

struct BetheRoot {
  double k1 = 0.0;
  double k2 = 0.0;
  double lambda = 0.0;  // k1^2 + k2^2
  double residual = 0.0;
  BetheModel model = BetheModel::Gaudin;
  int multiplicity = 1;
  int n = 0, m = 0;  // lattice labels the branch was continued from (0 for GraphZ)
};

// The Bethe equations use the jump 2*alpha, i.e. -Laplacian + 2 alpha delta(x1 - x2).
// The pde oracle takes the prefactor of the full delta term.
inline double bethe_to_oracle_alpha(double alpha) { return 2.0 * alpha; }

struct GaudinResidual {
  cplx r1, r2;
};

// exp(-2i k_n l) - (k_n+k_m-i a)/(k_n+k_m+i a) * (k_n-k_m-i a)/(k_n-k_m+i a), (n,m) = (1,2), (2,1).
// At alpha = 0 each fraction is 1 (its removable limit included).
GaudinResidual gaudin_residual(double k1, double k2, double l, double alpha);

// exp(i k_j L) - (k_j-k_l+i a)/(k_j-k_l-i a) for the two-boson ring.
GaudinResidual ring_residual(double k1, double k2, double L, double alpha);

struct ContinuationStep {
  double alpha;
  double k1, k2;
};

struct ContinuationOptions {
  double alpha_start = 1e-6;  // in units of 1/length
  double initial_step = 0.25;  // in log(alpha)
  double min_step = 1e-4;
  double newton_tol = 1e-14;
};

// Two bosons on [0, l], Dirichlet ends. Continued in alpha from the alpha = 0 lattice.
// paths, when given, receives one continuation path per returned root.
std::vector<BetheRoot> solve_gaudin(double l, double alpha, double lambda_max,
                                    std::vector<std::vector<ContinuationStep>>* paths = nullptr,
                                    const ContinuationOptions& opt = {});

// Two bosons on a ring of circumference L. Momenta may be negative; k1 <= k2.
std::vector<BetheRoot> solve_lieb_liniger_ring(double L, double alpha, double lambda_max,
                                               std::vector<std::vector<ContinuationStep>>* paths = nullptr,
                                               const ContinuationOptions& opt = {});

// Pair-interaction secular determinant on a graph.
struct GraphZSpec {
  enum class Layout { Factorised, Interval };

  MetricGraph graph;
  BoundaryConditions bc;
  Eigen::MatrixXd alpha;  // E x E, symmetric
  Layout layout = Layout::Factorised;
  std::string dimension_report;
};

// Validates and classifies. Supported: all alpha = 0 (any graph; full Kronecker
// assembly), or a single edge between two distinct vertices with alpha_00 >= 0.
GraphZSpec make_graph_z_spec(const MetricGraph& g, const BoundaryConditions& bc,
                             const Eigen::MatrixXd& alpha);

// Z(k1, k2) = det(1 - U(k1, k2)).
cplx assemble_Z(const GraphZSpec& spec, double k1, double k2);
// Smallest block of U whose determinant carries the zeros.
cplx reduced_Z(const GraphZSpec& spec, double k1, double k2);

struct PairSearchOptions {
  double grid = 0.0;  // 0 -> pi / (8 * total length)
  double tol = 1e-10;
};

// Common zeros of Z(k1, k2) and Z(k2, k1) with 0 <= k1 <= k2 and k1^2 + k2^2 <= lambda_max.
std::vector<BetheRoot> solve_graph_pair(const GraphZSpec& spec, double lambda_max,
                                        const PairSearchOptions& opt = {});

}  // namespace qg
