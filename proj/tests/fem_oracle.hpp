#pragma once

#include <vector>

#include "qgraph/graph.hpp"

namespace qgtest {

// Independent one-particle oracle: P1 finite elements with lumped mass on each
// edge, vertex conditions imposed weakly (psi_bv restricted to ker P, -<psi, L psi>
// added to the form). Eigenvalues by bisection on the Sylvester inertia of A - s M.
std::vector<double> fem_eigenvalues(const qg::MetricGraph& g, const qg::BoundaryConditions& bc,
                                    double h, double upper);

struct Extrapolated {
  std::vector<double> values;
  std::vector<double> err;  // |R - finest| as a crude estimate
};

// Three levels h, h/2, h/4, two-step Richardson in h^2.
Extrapolated fem_extrapolated(const qg::MetricGraph& g, const qg::BoundaryConditions& bc,
                              double h, double upper);

}  // namespace qgtest
