#include "qgraph/oracle.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "qgraph/errors.hpp"

namespace qg {

namespace {

using Trip = Eigen::Triplet<double>;
constexpr double pi = std::numbers::pi;

int cells(double len, double h, const char* what) {
  const double r = len / h;
  const int n = static_cast<int>(std::lround(r));
  if (n < 2 || std::abs(r - n) > 1e-9 * std::max(1.0, r))
    throw ValidationError(std::string("grid step does not divide the ") + what + " (misaligned diagonal)");
  return n;
}

bool is_fermionic(Sector s) { return s == Sector::Fermionic || s == Sector::HardcoreBosonic; }

struct Geometry {
  const DomainSpec& spec;
  int n = 0;
  int D = -1;  // wall distance in cells, -1 if none
  bool periodic = false;

  int side() const { return periodic ? n : n + 1; }
  int wrap(int i) const { return periodic ? (i % n + n) % n : i; }
  bool inside(int i, int j) const { return D < 0 || std::abs(i - j) <= D; }
  bool dirichlet(int i, int j) const {
    if (D >= 0 && std::abs(i - j) == D) return true;
    if (periodic) return false;
    if (spec.shape == Shape::Pencil) return i == n || j == n;
    if (spec.outer == OuterBoundary::Dirichlet) return i == 0 || j == 0 || i == n || j == n;
    return false;
  }
};

double eval(const Profile& p, double x) { return p ? p(x) : 0.0; }

// Full-domain assembly; nodes indexed row-major over (i, j).
struct FullSystem {
  SpMat A;
  Eigen::VectorXd mass;
  std::vector<int> index;  // grid -> unknown, -1 for Dirichlet / outside
  std::vector<std::pair<int, int>> nodes;
};

FullSystem assemble_full(const Geometry& g, double h) {
  const int s = g.side();
  FullSystem fs;
  fs.index.assign(static_cast<size_t>(s) * s, -1);
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j)
      if (g.inside(i, j) && !g.dirichlet(i, j)) {
        fs.index[static_cast<size_t>(i) * s + j] = static_cast<int>(fs.nodes.size());
        fs.nodes.push_back({i, j});
      }
  const int N = static_cast<int>(fs.nodes.size());
  if (N == 0) throw ValidationError("grid has no interior unknowns");
  auto id = [&](int i, int j) { return fs.index[static_cast<size_t>(g.wrap(i)) * s + g.wrap(j)]; };

  std::vector<Trip> t;
  t.reserve(static_cast<size_t>(N) * 7);
  fs.mass = Eigen::VectorXd::Zero(N);
  const double m6 = h * h / 6.0;
  // right-angle vertex c, acute vertices a, b; local stiffness 1/2 [[2,-1,-1],[-1,1,0],[-1,0,1]]
  auto triangle = [&](int ci, int cj, int ai, int aj, int bi, int bj) {
    if (!g.inside(ci, cj) || !g.inside(ai, aj) || !g.inside(bi, bj)) return;
    const int c = id(ci, cj), a = id(ai, aj), b = id(bi, bj);
    if (c >= 0) {
      t.emplace_back(c, c, 1.0);
      fs.mass(c) += m6;
      if (a >= 0) {
        t.emplace_back(c, a, -0.5);
        t.emplace_back(a, c, -0.5);
      }
      if (b >= 0) {
        t.emplace_back(c, b, -0.5);
        t.emplace_back(b, c, -0.5);
      }
    }
    if (a >= 0) {
      t.emplace_back(a, a, 0.5);
      fs.mass(a) += m6;
    }
    if (b >= 0) {
      t.emplace_back(b, b, 0.5);
      fs.mass(b) += m6;
    }
  };
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      triangle(i + 1, j, i, j, i + 1, j + 1);
      triangle(i, j + 1, i, j, i + 1, j + 1);
    }

  // boundary potential, lumped on boundary edges
  const DomainSpec& sp = g.spec;
  const bool robin = !g.periodic && (sp.shape == Shape::Pencil || sp.outer == OuterBoundary::Robin);
  if (robin && sp.sigma) {
    auto edge = [&](int i0, int j0, int i1, int j1, double s0, double s1) {
      if (!g.inside(i0, j0) || !g.inside(i1, j1)) return;
      const int a = id(i0, j0), b = id(i1, j1);
      if (a >= 0) t.emplace_back(a, a, -0.5 * h * eval(sp.sigma, s0));
      if (b >= 0) t.emplace_back(b, b, -0.5 * h * eval(sp.sigma, s1));
    };
    for (int k = 0; k < g.n; ++k) {
      const double s0 = k * h, s1 = (k + 1) * h;
      edge(0, k, 0, k + 1, s0, s1);  // x = 0
      edge(k, 0, k + 1, 0, s0, s1);  // y = 0
      if (sp.shape != Shape::Pencil) {
        edge(g.n, k, g.n, k + 1, s0, s1);  // x = l
        edge(k, g.n, k + 1, g.n, s0, s1);  // y = l
      }
    }
  }
  // contact term on the diagonal, trapezoidal weights in y
  if (sp.alpha) {
    const int last = g.periodic ? g.n - 1 : g.n;
    for (int i = 0; i <= last; ++i) {
      const int c = id(i, i);
      if (c < 0) continue;
      const bool end = !g.periodic && (i == 0 || i == g.n);
      t.emplace_back(c, c, (end ? 0.5 * h : h) * eval(sp.alpha, i * h));
    }
  }
  fs.A.resize(N, N);
  fs.A.setFromTriplets(t.begin(), t.end());
  fs.A.prune(0.0);
  return fs;
}

OracleMatrix project(const FullSystem& fs, const Geometry& g, double h) {
  OracleMatrix om;
  om.h = h;
  om.n = g.n;
  const Sector sec = g.spec.sector;
  const int N = static_cast<int>(fs.nodes.size());
  if (sec == Sector::Full) {
    om.A = fs.A;
    om.mass = fs.mass;
    om.nodes = fs.nodes;
    return om;
  }
  const int s = g.side();
  // representative index and coefficient of every full unknown
  std::vector<int> rep(N, -1);
  std::vector<double> coef(N, 0.0);
  const double r2 = 1.0 / std::sqrt(2.0);
  const bool fermi = is_fermionic(sec);
  for (int u = 0; u < N; ++u) {
    auto [i, j] = fs.nodes[u];
    if (i > j) continue;
    if (i == j && fermi) continue;
    const int p = static_cast<int>(om.nodes.size());
    om.nodes.push_back({i, j});
    if (i == j) {
      rep[u] = p;
      coef[u] = 1.0;
    } else {
      const int v = fs.index[static_cast<size_t>(j) * s + i];
      if (v < 0) throw ValidationError("domain is not symmetric under exchange");
      rep[u] = p;
      coef[u] = r2;
      rep[v] = p;
      coef[v] = fermi ? -r2 : r2;
    }
  }
  const int P = static_cast<int>(om.nodes.size());
  om.mass = Eigen::VectorXd::Zero(P);
  for (int u = 0; u < N; ++u)
    if (rep[u] >= 0) om.mass(rep[u]) += coef[u] * coef[u] * fs.mass(u);
  std::vector<Trip> t;
  for (int k = 0; k < fs.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(fs.A, k); it; ++it) {
      const int a = static_cast<int>(it.row()), b = static_cast<int>(it.col());
      const int p = rep[a], q = rep[b];
      if (p < 0 || q < 0 || p > q) continue;
      t.emplace_back(p, q, coef[a] * it.value() * coef[b]);
    }
  SpMat U(P, P);
  U.setFromTriplets(t.begin(), t.end());
  // mirror the upper triangle so symmetry is exact
  std::vector<Trip> full;
  for (int k = 0; k < U.outerSize(); ++k)
    for (SpMat::InnerIterator it(U, k); it; ++it) {
      full.emplace_back(it.row(), it.col(), it.value());
      if (it.row() != it.col()) full.emplace_back(it.col(), it.row(), it.value());
    }
  om.A.resize(P, P);
  om.A.setFromTriplets(full.begin(), full.end());
  om.A.prune(0.0);
  return om;
}

// Eigenvalues of the banded pencil B = M^{-1/2} A M^{-1/2}, either by index or by value window.
std::vector<double> banded_eigenvalues(const OracleMatrix& om, char range, int il, int iu, double vl,
                                       double vu) {
  const int n = static_cast<int>(om.A.rows());
  int kd = 0;
  for (int k = 0; k < om.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(om.A, k); it; ++it) kd = std::max(kd, static_cast<int>(std::abs(it.row() - it.col())));
  const int ldab = kd + 1;
  std::vector<double> ab(static_cast<size_t>(ldab) * n, 0.0);
  const Eigen::VectorXd dinv = om.mass.cwiseSqrt().cwiseInverse();
  for (int k = 0; k < om.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(om.A, k); it; ++it) {
      const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
      if (i < j) continue;
      ab[static_cast<size_t>(i - j) + static_cast<size_t>(j) * ldab] = it.value() * dinv(i) * dinv(j);
    }
  std::vector<double> w(n);
  std::vector<lapack_int> ifail(n);
  double q = 0.0, z = 0.0;
  lapack_int found = 0;
  const double abstol = 2 * LAPACKE_dlamch('S');
  const lapack_int info = LAPACKE_dsbevx(LAPACK_COL_MAJOR, 'N', range, 'L', n, kd, ab.data(), ldab, &q, 1, vl, vu,
                                         il, iu, abstol, &found, w.data(), &z, 1, ifail.data());
  if (info != 0) throw SolverError("banded eigensolver failed, info = " + std::to_string(info));
  w.resize(found);
  std::sort(w.begin(), w.end());
  return w;
}

}  // namespace

std::string to_string(Shape s) {
  switch (s) {
    case Shape::Square: return "square";
    case Shape::PeriodicSquare: return "periodic";
    case Shape::Pencil: return "pencil";
  }
  return "?";
}

std::string to_string(Sector s) {
  switch (s) {
    case Sector::Full: return "none";
    case Sector::Bosonic: return "bosonic";
    case Sector::Fermionic: return "fermionic";
    case Sector::HardcoreBosonic: return "hardcore";
  }
  return "?";
}

Sector parse_sector(const std::string& s) {
  if (s == "none" || s == "full") return Sector::Full;
  if (s == "bosonic") return Sector::Bosonic;
  if (s == "fermionic") return Sector::Fermionic;
  if (s == "hardcore") return Sector::HardcoreBosonic;
  throw ValidationError("unknown sector '" + s + "' (none, bosonic, fermionic, hardcore)");
}

DomainSpec DomainSpec::square(double l, Sector sector) {
  DomainSpec s;
  s.shape = Shape::Square;
  s.length = l;
  s.sector = sector;
  return s;
}

DomainSpec DomainSpec::periodic(double L, Sector sector) {
  DomainSpec s;
  s.shape = Shape::PeriodicSquare;
  s.length = L;
  s.sector = sector;
  return s;
}

DomainSpec DomainSpec::pencil(double d, double L, Sector sector) {
  DomainSpec s;
  s.shape = Shape::Pencil;
  s.length = L;
  s.d = d;
  s.hard_wall = true;
  s.sector = sector;
  s.outer = OuterBoundary::Robin;
  return s;
}

void DomainSpec::validate() const {
  if (!(length > 0.0) || !std::isfinite(length)) throw ValidationError("domain length must be positive");
  if (shape == Shape::Pencil || hard_wall) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ValidationError("pencil width d must be positive");
    if (shape == Shape::PeriodicSquare) throw ValidationError("hard wall is not supported on the periodic square");
  }
  if (shape == Shape::Pencil && !(length > 3.0 * d))
    throw ValidationError("pencil truncation length must exceed 3 d");
  // sampled profiles must be bounded
  for (const Profile* p : {&sigma, &alpha}) {
    if (!*p) continue;
    for (int k = 0; k <= 64; ++k) {
      const double v = (*p)(length * k / 64.0);
      if (!std::isfinite(v)) throw ValidationError("boundary or contact profile is not bounded");
    }
  }
}

OracleMatrix build_operator(const DomainSpec& spec, double h) {
  spec.validate();
  if (!(h > 0.0)) throw ValidationError("grid step must be positive");
  Geometry g{spec};
  g.n = cells(spec.length, h, "domain length");
  g.periodic = spec.shape == Shape::PeriodicSquare;
  if (spec.shape == Shape::Pencil || spec.hard_wall) g.D = cells(spec.d, h, "pencil width");
  const FullSystem fs = assemble_full(g, h);
  OracleMatrix om = project(fs, g, h);
  require_symmetric(om.A);
  return om;
}

std::vector<double> oracle_eigenvalues(const DomainSpec& spec, double h, int m) {
  if (spec.shape == Shape::Pencil) return pencil_lowest(spec, h, m);
  const OracleMatrix om = build_operator(spec, h);
  const EigenSolution s = eigen_lowest(om.A, om.mass, m);
  return {s.values.data(), s.values.data() + s.values.size()};
}

int oracle_count_below(const DomainSpec& spec, double h, double lambda) {
  const OracleMatrix om = build_operator(spec, h);
  return count_below(om.A, om.mass, lambda);
}

std::vector<double> pencil_lowest(const DomainSpec& spec, double h, int m) {
  const OracleMatrix om = build_operator(spec, h);
  const int n = static_cast<int>(om.A.rows());
  if (m < 1 || m > n) throw ValidationError("requested eigenvalue count out of range");
  // band reduction costs O(n^2 kd); the iterative solver wins beyond a few thousand unknowns
  if (n > 4000) {
    const EigenSolution s = eigen_lowest(om.A, om.mass, m);
    return {s.values.data(), s.values.data() + s.values.size()};
  }
  return banded_eigenvalues(om, 'I', 1, m, 0.0, 0.0);
}

std::vector<double> pencil_spectrum(double d, double L, const Profile& sigma, Sector sector, double h,
                                    double upper) {
  if (!(L > d)) throw ValidationError("pencil length must exceed d");
  DomainSpec spec = DomainSpec::pencil(d, L, sector);
  spec.sigma = sigma;
  const OracleMatrix om = build_operator(spec, h);
  // Gershgorin lower bound of B
  const Eigen::VectorXd dinv = om.mass.cwiseSqrt().cwiseInverse();
  double lo = std::numeric_limits<double>::infinity();
  Eigen::VectorXd off = Eigen::VectorXd::Zero(om.A.rows()), diag = Eigen::VectorXd::Zero(om.A.rows());
  for (int k = 0; k < om.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(om.A, k); it; ++it) {
      const double v = it.value() * dinv(it.row()) * dinv(it.col());
      if (it.row() == it.col())
        diag(it.row()) += v;
      else
        off(it.row()) += std::abs(v);
    }
  for (Eigen::Index i = 0; i < diag.size(); ++i) lo = std::min(lo, diag(i) - off(i));
  if (upper <= lo) return {};
  return banded_eigenvalues(om, 'V', 0, 0, lo - 1.0, upper);
}

std::optional<double> essential_bottom(const DomainSpec& spec) {
  if (spec.shape != Shape::Pencil) return std::nullopt;
  const double d2 = spec.d * spec.d;
  if (is_fermionic(spec.sector)) return 2 * pi * pi / d2;
  return pi * pi / (2 * d2);
}

OracleResult extrapolate(const DomainSpec& spec, int m, const std::vector<double>& h_list) {
  if (h_list.size() < 3) throw ValidationError("extrapolation needs at least 3 grid levels");
  for (size_t i = 1; i < h_list.size(); ++i)
    if (std::abs(h_list[i - 1] / h_list[i] - 2.0) > 1e-9)
      throw ValidationError("grid levels must halve successively");
  OracleResult r;
  r.h = h_list;
  r.essential_bottom = essential_bottom(spec);
  for (double h : h_list) r.levels.push_back(oracle_eigenvalues(spec, h, m));
  const size_t G = h_list.size();
  const auto& l1 = r.levels[G - 3];
  const auto& l2 = r.levels[G - 2];
  const auto& l3 = r.levels[G - 1];
  for (int i = 0; i < m; ++i) {
    const double d1 = l1[i] - l2[i], d2 = l2[i] - l3[i];
    const double noise = 1e-12 * std::max(1.0, std::abs(l3[i]));
    if (d1 * d2 < 0.0 && std::abs(d2) > noise && std::abs(d1) > noise)
      throw SolverError("non-monotone convergence of eigenvalue " + std::to_string(i));
    const double order = std::abs(d2) > 0.0 ? std::log2(std::abs(d1 / d2)) : std::numeric_limits<double>::infinity();
    r.values.push_back((4 * l3[i] - l2[i]) / 3);
    r.errors.push_back(std::abs(d2) / 3);
    r.orders.push_back(order);
    r.flagged.push_back(!(std::abs(order - 2.0) <= 0.5));
  }
  return r;
}

void export_coordinate(const OracleMatrix& m, std::ostream& os) {
  os.precision(17);
  for (int k = 0; k < m.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(m.A, k); it; ++it) os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
}

}  // namespace qg
