#include "qgraph/graph.hpp"

#include <cmath>
#include <sstream>

namespace qg {

MetricGraph::MetricGraph(int num_vertices, std::vector<Edge> edges)
    : nv_(num_vertices), edges_(std::move(edges)) {
  if (nv_ <= 0) throw ValidationError("graph needs at least one vertex");
  if (edges_.empty()) throw ValidationError("graph needs at least one edge");
  for (size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    if (!(std::isfinite(ed.length) && ed.length > 0.0)) {
      std::ostringstream os;
      os << "edge " << e << ": length must be positive and finite (got " << ed.length << ")";
      throw ValidationError(os.str());
    }
    if (ed.from < 0 || ed.from >= nv_ || ed.to < 0 || ed.to >= nv_) {
      std::ostringstream os;
      os << "edge " << e << ": endpoint references unknown vertex";
      throw ValidationError(os.str());
    }
  }
}

std::vector<int> MetricGraph::incident_slots(int v) const {
  const int E = num_edges();
  std::vector<int> s;
  for (int e = 0; e < E; ++e)
    if (edges_[e].from == v) s.push_back(e);
  for (int e = 0; e < E; ++e)
    if (edges_[e].to == v) s.push_back(E + e);
  return s;
}

double total_length(const MetricGraph& g) {
  double s = 0.0;
  for (const Edge& e : g.edges()) s += e.length;
  return s;
}

MetricGraph scale_graph(const MetricGraph& g, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("scale factor must be positive");
  std::vector<Edge> edges = g.edges();
  for (Edge& e : edges) e.length *= eta;
  return MetricGraph(g.num_vertices(), std::move(edges));
}

namespace {

void check_block(const CMat& P, const CMat& L, const std::string& what) {
  const int n = static_cast<int>(P.rows());
  if (P.cols() != n || L.rows() != n || L.cols() != n)
    throw ValidationError(what + ": P and L must be square of equal size");
  const double sp = std::max(1.0, P.norm());
  if ((P - P.adjoint()).norm() > kMatrixTol * sp)
    throw ValidationError(what + ": P is not self-adjoint");
  if ((P * P - P).norm() > kMatrixTol * sp)
    throw ValidationError(what + ": P is not idempotent");
  const double sl = std::max(1.0, L.norm());
  if ((L - L.adjoint()).norm() > kMatrixTol * sl)
    throw ValidationError(what + ": L is not self-adjoint");
  CMat Q = CMat::Identity(n, n) - P;
  if ((Q * L * Q - L).norm() > kMatrixTol * sl)
    throw ValidationError(what + ": L does not satisfy P_perp L P_perp = L");
}

}  // namespace

void BoundaryConditions::validate() const { check_block(P, L, "boundary conditions"); }

bool BoundaryConditions::is_real() const {
  return P.imag().norm() == 0.0 && L.imag().norm() == 0.0;
}

BoundaryConditions scale_conditions(const BoundaryConditions& bc, double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ValidationError("scale factor must be positive");
  return BoundaryConditions{bc.P, bc.L / eta};
}

void vertex_block(const VertexConditionSpec& spec, int d, CMat& Pv, CMat& Lv) {
  Pv = CMat::Zero(d, d);
  Lv = CMat::Zero(d, d);
  const CMat J = CMat::Ones(d, d);
  if (std::holds_alternative<Dirichlet>(spec)) {
    Pv = CMat::Identity(d, d);
  } else if (std::holds_alternative<Kirchhoff>(spec)) {
    Pv = CMat::Identity(d, d) - J / double(d);
  } else if (const auto* dl = std::get_if<Delta>(&spec)) {
    Pv = CMat::Identity(d, d) - J / double(d);
    Lv = -(dl->strength / double(d * d)) * J;
  } else if (const auto* rb = std::get_if<Robin>(&spec)) {
    if (static_cast<int>(rb->values.size()) != d)
      throw ValidationError("robin: expected one value per incident edge end");
    for (int i = 0; i < d; ++i) Lv(i, i) = rb->values[i];
  } else {
    const auto& c = std::get<Custom>(spec);
    if (c.P.rows() != d || c.P.cols() != d || c.L.rows() != d || c.L.cols() != d) {
      std::ostringstream os;
      os << "custom block: expected " << d << "x" << d << " matrices, got P " << c.P.rows() << "x"
         << c.P.cols() << ", L " << c.L.rows() << "x" << c.L.cols();
      throw ValidationError(os.str());
    }
    check_block(c.P, c.L, "custom block");
    Pv = c.P;
    Lv = c.L;
  }
}

BoundaryConditions assemble_conditions(const MetricGraph& g,
                                       const std::vector<VertexConditionSpec>& specs) {
  if (static_cast<int>(specs.size()) != g.num_vertices())
    throw ValidationError("one vertex condition per vertex required");
  const int n = 2 * g.num_edges();
  BoundaryConditions bc{CMat::Zero(n, n), CMat::Zero(n, n)};
  for (int v = 0; v < g.num_vertices(); ++v) {
    const std::vector<int> s = g.incident_slots(v);
    const int d = static_cast<int>(s.size());
    if (d == 0) continue;
    CMat Pv, Lv;
    vertex_block(specs[v], d, Pv, Lv);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        bc.P(s[i], s[j]) = Pv(i, j);
        bc.L(s[i], s[j]) = Lv(i, j);
      }
  }
  bc.validate();
  return bc;
}

std::string describe(const VertexConditionSpec& spec) {
  std::ostringstream os;
  if (std::holds_alternative<Dirichlet>(spec)) os << "dirichlet";
  else if (std::holds_alternative<Kirchhoff>(spec)) os << "kirchhoff";
  else if (const auto* d = std::get_if<Delta>(&spec)) os << "delta(" << d->strength << ")";
  else if (const auto* r = std::get_if<Robin>(&spec)) {
    os << "robin(";
    for (size_t i = 0; i < r->values.size(); ++i) os << (i ? "," : "") << r->values[i];
    os << ")";
  } else os << "custom";
  return os.str();
}

}  // namespace qg
