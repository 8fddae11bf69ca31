#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "qgraph/errors.hpp"

namespace qg {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

struct Edge {
  int from = 0;  // vertex at x = 0
  int to = 0;    // vertex at x = length
  double length = 1.0;
};

// Compact metric graph. Vertices are dense ids 0..num_vertices-1.
class MetricGraph {
 public:
  MetricGraph(int num_vertices, std::vector<Edge> edges);

  int num_vertices() const { return nv_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  // Boundary-value slots (e, end) at vertex v, in global psi_bv order:
  // slot e is psi_e(0), slot E + e is psi_e(l_e).
  std::vector<int> incident_slots(int v) const;
  int degree(int v) const { return static_cast<int>(incident_slots(v).size()); }

 private:
  int nv_;
  std::vector<Edge> edges_;
};

double total_length(const MetricGraph& g);
MetricGraph scale_graph(const MetricGraph& g, double eta);

inline constexpr double kMatrixTol = 1e-12;

// (P + L) psi_bv + P_perp psi'_bv = 0, psi' the inward derivative.
struct BoundaryConditions {
  CMat P;
  CMat L;

  int dim() const { return static_cast<int>(P.rows()); }
  // Throws ValidationError when P is not an orthogonal projector or L is not
  // self-adjoint with P_perp L P_perp = L.
  void validate() const;
  bool is_real() const;
};

// Scales L by 1/eta: the conditions that go with scale_graph(g, eta) when the
// spectrum is to scale exactly by eta^-2.
BoundaryConditions scale_conditions(const BoundaryConditions& bc, double eta);

struct Dirichlet {};
struct Kirchhoff {};
struct Delta {
  double strength = 0.0;  // sum of inward derivatives = strength * psi(v)
};
struct Robin {
  std::vector<double> values;  // psi'_in = -value * psi, per incident slot
};
struct Custom {
  CMat P;
  CMat L;
};

using VertexConditionSpec = std::variant<Dirichlet, Kirchhoff, Delta, Robin, Custom>;

// Local block for a vertex of degree d.
void vertex_block(const VertexConditionSpec& spec, int d, CMat& Pv, CMat& Lv);

BoundaryConditions assemble_conditions(const MetricGraph& g,
                                       const std::vector<VertexConditionSpec>& specs);

std::string describe(const VertexConditionSpec& spec);

}  // namespace qg
