#include "fem_oracle.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <stdexcept>

namespace qgtest {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

struct System {
  SpMat A, M;
};

System assemble(const qg::MetricGraph& g, const qg::BoundaryConditions& bc, double h) {
  if (!bc.is_real()) throw std::runtime_error("fem oracle handles real conditions only");
  const int E = g.num_edges();
  const int n = 2 * E;
  Eigen::MatrixXd P = bc.P.real(), L = bc.L.real();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(P);
  std::vector<int> ker;
  for (int i = 0; i < n; ++i)
    if (es.eigenvalues()(i) < 0.5) ker.push_back(i);
  const int r = static_cast<int>(ker.size());
  Eigen::MatrixXd Q(n, r);
  for (int j = 0; j < r; ++j) Q.col(j) = es.eigenvectors().col(ker[j]);

  std::vector<int> cells(E), offset(E);
  int ndof = r;
  for (int e = 0; e < E; ++e) {
    cells[e] = std::max(2, static_cast<int>(std::ceil(g.edge(e).length / h - 1e-9)));
    offset[e] = ndof;
    ndof += cells[e] - 1;
  }
  std::vector<Trip> ta, tm;
  auto node = [&](int e, int i) {
    std::vector<std::pair<int, double>> v;
    if (i == 0 || i == cells[e]) {
      const int s = (i == 0) ? e : E + e;
      for (int j = 0; j < r; ++j)
        if (Q(s, j) != 0.0) v.push_back({j, Q(s, j)});
    } else {
      v.push_back({offset[e] + i - 1, 1.0});
    }
    return v;
  };
  for (int e = 0; e < E; ++e) {
    const double he = g.edge(e).length / cells[e];
    for (int c = 0; c < cells[e]; ++c) {
      auto a = node(e, c), b = node(e, c + 1);
      const double kl[2][2] = {{1 / he, -1 / he}, {-1 / he, 1 / he}};
      const std::vector<std::pair<int, double>>* nb[2] = {&a, &b};
      for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q)
          for (auto [i, ci] : *nb[p])
            for (auto [j, cj] : *nb[q]) ta.emplace_back(i, j, kl[p][q] * ci * cj);
      for (int p = 0; p < 2; ++p)
        for (auto [i, ci] : *nb[p])
          for (auto [j, cj] : *nb[p]) tm.emplace_back(i, j, 0.5 * he * ci * cj);
    }
  }
  Eigen::MatrixXd Lk = Q.transpose() * L * Q;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j)
      if (Lk(i, j) != 0.0) ta.emplace_back(i, j, -Lk(i, j));
  System s;
  s.A.resize(ndof, ndof);
  s.M.resize(ndof, ndof);
  s.A.setFromTriplets(ta.begin(), ta.end());
  s.M.setFromTriplets(tm.begin(), tm.end());
  return s;
}

struct Counter {
  const System& sys;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  bool analysed = false;

  int operator()(double sigma) {
    // an exact singular pivot at an eigenvalue: nudge the shift
    for (int attempt = 0; attempt < 4; ++attempt) {
      SpMat K = sys.A - sigma * sys.M;
      if (!analysed) {
        ldlt.analyzePattern(K);
        analysed = true;
      }
      ldlt.factorize(K);
      if (ldlt.info() == Eigen::Success) break;
      if (attempt == 3) throw std::runtime_error("fem oracle: factorisation failed at " + std::to_string(sigma));
      sigma += 1e-12 * std::max(1.0, std::abs(sigma));
    }
    const auto& d = ldlt.vectorD();
    int neg = 0;
    for (int i = 0; i < d.size(); ++i)
      if (d(i) < 0) ++neg;
    return neg;
  }
};

void split(Counter& cnt, double a, double b, int ca, int cb, std::vector<double>& out) {
  if (cb <= ca) return;
  if (b - a <= 1e-13 * std::max(1.0, std::abs(b))) {
    for (int i = ca; i < cb; ++i) out[i] = 0.5 * (a + b);
    return;
  }
  const double m = 0.5 * (a + b);
  const int cm = cnt(m);
  split(cnt, a, m, ca, cm, out);
  split(cnt, m, b, cm, cb, out);
}

}  // namespace

std::vector<double> fem_eigenvalues(const qg::MetricGraph& g, const qg::BoundaryConditions& bc,
                                    double h, double upper) {
  System s = assemble(g, bc, h);
  Counter cnt{s, {}, false};
  double lo = -1.0;
  while (cnt(lo) > 0) lo *= 4;
  const int n = cnt(upper);
  std::vector<double> out(n);
  split(cnt, lo, upper, 0, n, out);
  return out;
}

Extrapolated fem_extrapolated(const qg::MetricGraph& g, const qg::BoundaryConditions& bc, double h,
                              double upper) {
  const double up = upper * 1.3 + 5.0;
  auto l1 = fem_eigenvalues(g, bc, h, up);
  auto l2 = fem_eigenvalues(g, bc, h / 2, up);
  auto l3 = fem_eigenvalues(g, bc, h / 4, up);
  const size_t n = std::min({l1.size(), l2.size(), l3.size()});
  Extrapolated x;
  for (size_t i = 0; i < n; ++i) {
    const double r1 = (4 * l2[i] - l1[i]) / 3, r2 = (4 * l3[i] - l2[i]) / 3;
    const double r = (16 * r2 - r1) / 15;
    if (r > upper) break;
    x.values.push_back(r);
    x.err.push_back(std::abs(r - l3[i]));
  }
  return x;
}

}  // namespace qgtest
