#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>

#include "qgraph/one_particle.hpp"

namespace qg {

namespace {
constexpr double kPi = 3.14159265358979323846;
const cplx I(0.0, 1.0);
}  // namespace

ScatteringData::ScatteringData(const BoundaryConditions& bc) : dim(bc.dim()), P(bc.P) {
  Eigen::SelfAdjointEigenSolver<CMat> ep(bc.P);
  std::vector<int> ker;
  for (int i = 0; i < dim; ++i)
    if (ep.eigenvalues()(i) < 0.5) ker.push_back(i);
  const int r = static_cast<int>(ker.size());
  rank_p = dim - r;
  CMat K(dim, r);
  for (int j = 0; j < r; ++j) K.col(j) = ep.eigenvectors().col(ker[j]);
  if (r > 0) {
    CMat Lk = K.adjoint() * bc.L * K;
    Lk = 0.5 * (Lk + Lk.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<CMat> el(Lk);
    Qk = K * el.eigenvectors();
    lam.assign(el.eigenvalues().data(), el.eigenvalues().data() + r);
    const double scale = std::max(1.0, bc.L.norm());
    for (double& x : lam)
      if (std::abs(x) < kMatrixTol * scale) x = 0.0;
  } else {
    Qk = CMat(dim, 0);
  }
}

CMat ScatteringData::S(cplx k) const {
  CMat s = -P;
  const int r = static_cast<int>(lam.size());
  for (int j = 0; j < r; ++j) {
    if (lam[j] == 0.0) {
      // -(0 - ik)/(0 + ik) = 1, also at k = 0
      s += Qk.col(j) * Qk.col(j).adjoint();
      continue;
    }
    const cplx den = lam[j] + I * k;
    if (std::abs(den) < 1e-14 * std::max(1.0, std::abs(lam[j]))) {
      std::ostringstream os;
      os << "scattering matrix singular at k = " << k << " (L + ik singular on ker P)";
      throw SolverError(os.str());
    }
    const cplx d = -(lam[j] - I * k) / den;
    s += d * Qk.col(j) * Qk.col(j).adjoint();
  }
  return s;
}

CMat scattering_matrix(const BoundaryConditions& bc, cplx k) { return ScatteringData(bc).S(k); }

CMat metric_matrix(const MetricGraph& g, cplx k) {
  const int E = g.num_edges();
  CMat T = CMat::Zero(2 * E, 2 * E);
  for (int e = 0; e < E; ++e) {
    const cplx z = std::exp(I * k * g.edge(e).length);
    T(e, E + e) = z;
    T(E + e, e) = z;
  }
  return T;
}

SecularEvaluation evaluate_secular(const MetricGraph& g, const BoundaryConditions& bc, cplx k) {
  if (bc.dim() != 2 * g.num_edges()) throw ValidationError("conditions do not match graph size");
  SecularEvaluation ev;
  ev.k = k;
  ev.S = scattering_matrix(bc, k);
  ev.U = ev.S * metric_matrix(g, k);
  ev.value = (CMat::Identity(bc.dim(), bc.dim()) - ev.U).partialPivLu().determinant();
  return ev;
}

cplx secular_value(const MetricGraph& g, const BoundaryConditions& bc, cplx k) {
  return evaluate_secular(g, bc, k).value;
}

SecularFunction::SecularFunction(const MetricGraph& g, const BoundaryConditions& bc)
    : g_(g), sd_(bc), total_(total_length(g)) {
  if (bc.dim() != 2 * g.num_edges()) throw ValidationError("conditions do not match graph size");
}

cplx SecularFunction::value(cplx k) const {
  const int n = sd_.dim;
  CMat M = CMat::Identity(n, n) - sd_.S(k) * metric_matrix(g_, k);
  if (n == 2) return M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
  return M.partialPivLu().determinant();
}

cplx SecularFunction::phase_theta(cplx k) const {
  cplx th = kPi * double(sd_.rank_p + g_.num_edges()) + 2.0 * k * total_;
  for (double l : sd_.lam) {
    cplx a;
    if (l > 0) a = std::atan(k / l);
    else if (l < 0) a = kPi + std::atan(k / l);
    else a = kPi / 2;
    th += kPi - 2.0 * a;
  }
  return th;
}

cplx SecularFunction::proxy(cplx k) const { return std::exp(-0.5 * I * phase_theta(k)) * value(k); }

cplx negative_secular(const MetricGraph& g, const ScatteringData& sd, cplx kappa) {
  const int n = sd.dim;
  const int r = static_cast<int>(sd.lam.size());
  const int E = g.num_edges();
  CMat T = CMat::Zero(n, n);
  for (int e = 0; e < E; ++e) {
    const cplx z = std::exp(-kappa * g.edge(e).length);
    T(e, E + e) = z;
    T(E + e, e) = z;
  }
  CMat M = CMat::Zero(n + r, n + r);
  M.topLeftCorner(n, n) = CMat::Identity(n, n) + sd.P * T;
  M.topRightCorner(n, r) = sd.Qk;
  CMat C = sd.Qk.adjoint() * T;
  for (int j = 0; j < r; ++j) {
    M.block(n + j, 0, 1, n) = (kappa + sd.lam[j]) * C.row(j);
    M(n + j, n + j) = kappa - sd.lam[j];
  }
  return M.partialPivLu().determinant();
}

}  // namespace qg
