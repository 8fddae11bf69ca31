#include "qgraph/bethe.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qgraph/errors.hpp"
#include "qgraph/one_particle.hpp"
#include "qgraph/roots.hpp"

namespace qg {

namespace {

constexpr double pi = std::numbers::pi;
// inclusive energy cutoff, tolerant to rounded inputs
constexpr double kBoundSlack = 1e-8;

// (x - i a)/(x + i a), equal to 1 at a = 0 including x = 0.
cplx s_factor(double x, double a) {
  if (a == 0.0) return 1.0;
  return cplx(x, -a) / cplx(x, a);
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError(std::string(what) + " must be positive and finite");
}

// The two Bethe models in logarithmic form F(k) = 0 with fixed quantum numbers.
struct LogEquations {
  BetheModel model;
  double len;
  double alpha;
  double I1, I2;

  // d/dk atan(x/a)
  static double datan(double x, double a) { return a / (a * a + x * x); }

  Eigen::Vector2d F(const Eigen::Vector2d& k) const {
    const double a = alpha;
    if (model == BetheModel::Gaudin) {
      const double s = k(0) + k(1), d = k(0) - k(1);
      return {k(0) * len + std::atan(s / a) + std::atan(d / a) - pi * I1,
              k(1) * len + std::atan(s / a) - std::atan(d / a) - pi * I2};
    }
    const double d = k(0) - k(1);
    return {k(0) * len - pi + 2 * std::atan(d / a) - 2 * pi * I1,
            k(1) * len - pi - 2 * std::atan(d / a) - 2 * pi * I2};
  }

  Eigen::Matrix2d J(const Eigen::Vector2d& k) const {
    const double a = alpha;
    Eigen::Matrix2d j;
    if (model == BetheModel::Gaudin) {
      const double ps = datan(k(0) + k(1), a), pd = datan(k(0) - k(1), a);
      j << len + ps + pd, ps - pd, ps - pd, len + ps + pd;
      return j;
    }
    const double pd = 2 * datan(k(0) - k(1), a);
    j << len + pd, -pd, -pd, len + pd;
    return j;
  }
};

bool newton(const LogEquations& eq, Eigen::Vector2d& k, double tol) {
  for (int it = 0; it < 40; ++it) {
    const Eigen::Vector2d f = eq.F(k);
    const double scale = 1.0 + eq.len * k.cwiseAbs().maxCoeff();
    if (f.cwiseAbs().maxCoeff() <= tol * scale) return true;
    const Eigen::Vector2d dk = eq.J(k).partialPivLu().solve(-f);
    if (!dk.allFinite()) return false;
    k += dk;
    if (dk.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + k.cwiseAbs().maxCoeff())) {
      const double r = eq.F(k).cwiseAbs().maxCoeff();
      return r <= 100 * tol * scale;
    }
  }
  return false;
}

struct Lattice {
  int n, m;
  double I1, I2;
  Eigen::Vector2d k0;  // alpha = 0 momenta
  double split;         // coefficient c in the small-alpha half-split c*sqrt(alpha), 0 if none
};

std::string label(const Lattice& p) {
  std::ostringstream os;
  os << "(" << p.n << "," << p.m << ")";
  return os.str();
}

bool ordered_ok(BetheModel model, const Eigen::Vector2d& k) {
  const double tol = 1e-12 * (1.0 + k.cwiseAbs().maxCoeff());
  if (k(0) > k(1) + tol) return false;
  if (model == BetheModel::Gaudin && !(k(0) > 0.0)) return false;
  return true;
}

Eigen::Vector2d small_alpha_guess(const Lattice& p, double alpha) {
  Eigen::Vector2d k = p.k0;
  if (p.split > 0.0) {
    const double e = p.split * std::sqrt(alpha);
    k(0) -= e;
    k(1) += e;
  }
  return k;
}

// Continue one lattice point from alpha_start to alpha.
Eigen::Vector2d continue_branch(BetheModel model, double len, const Lattice& p, double alpha,
                                const ContinuationOptions& opt,
                                std::vector<ContinuationStep>* path) {
  LogEquations eq{model, len, 0.0, p.I1, p.I2};
  const double a0 = std::min(alpha, opt.alpha_start / len);
  eq.alpha = a0;
  Eigen::Vector2d k = small_alpha_guess(p, a0);
  if (!newton(eq, k, opt.newton_tol) || !ordered_ok(model, k))
    throw SolverError("continuation failed to start at lattice point " + label(p));
  if (path) path->push_back({a0, k(0), k(1)});
  const double t_end = std::log(alpha);
  double t = std::log(a0);
  double dt = opt.initial_step;
  Eigen::Vector2d prev = k;
  double prev_dt = 0.0;
  const double spacing = (model == BetheModel::Gaudin ? pi : 2 * pi) / len;
  while (t < t_end) {
    const double step = std::min(dt, t_end - t);
    Eigen::Vector2d guess = k;
    if (prev_dt > 0.0) guess += (k - prev) * (step / prev_dt);
    eq.alpha = (t + step >= t_end) ? alpha : std::exp(t + step);
    Eigen::Vector2d trial = guess;
    const bool ok = newton(eq, trial, opt.newton_tol) && ordered_ok(model, trial) &&
                    (trial - k).cwiseAbs().maxCoeff() < 0.25 * spacing;
    if (!ok) {
      dt = step / 2;
      if (dt < opt.min_step)
        throw SolverError("continuation stuck at lattice point " + label(p) + " near alpha = " +
                          std::to_string(std::exp(t)));
      continue;
    }
    prev = k;
    prev_dt = step;
    k = trial;
    t += step;
    if (path) path->push_back({eq.alpha, k(0), k(1)});
    dt = std::min(1.0, step * 1.5);
  }
  return k;
}

std::vector<BetheRoot> solve_bethe(BetheModel model, double len, double alpha, double lambda_max,
                                   std::vector<std::vector<ContinuationStep>>* paths,
                                   const ContinuationOptions& opt) {
  check_positive(len, model == BetheModel::Gaudin ? "interval length" : "ring circumference");
  check_positive(lambda_max, "lambda_max");
  if (!std::isfinite(alpha)) throw ValidationError("alpha must be finite");
  lambda_max *= 1.0 + kBoundSlack;
  if (alpha < 0.0)
    throw SolverError("continuation refused for attractive alpha < 0: roots leave the real lattice");

  std::vector<Lattice> lattice;
  if (model == BetheModel::Gaudin) {
    const double q = pi / len;
    for (int n = 1; 2.0 * n * n * q * q <= lambda_max; ++n)
      for (int m = n; (1.0 * n * n + 1.0 * m * m) * q * q <= lambda_max; ++m)
        lattice.push_back({n, m, double(n), double(m + 1), {n * q, m * q},
                           n == m ? std::sqrt(1.0 / (2.0 * len)) : 0.0});
  } else {
    const double q = 2 * pi / len;
    const int pmax = static_cast<int>(std::floor(std::sqrt(lambda_max) / q)) + 1;
    for (int p = -pmax; p <= pmax; ++p)
      for (int r = p; r <= pmax; ++r)
        if ((1.0 * p * p + 1.0 * r * r) * q * q <= lambda_max)
          lattice.push_back({p, r, double(p - 1), double(r), {p * q, r * q},
                             p == r ? std::sqrt(1.0 / len) : 0.0});
  }

  std::vector<BetheRoot> out;
  std::vector<std::vector<ContinuationStep>> all_paths;
  for (const auto& p : lattice) {
    Eigen::Vector2d k = p.k0;
    std::vector<ContinuationStep> path;
    if (alpha > 0.0) {
      k = continue_branch(model, len, p, alpha, opt, paths ? &path : nullptr);
    } else if (paths) {
      path.push_back({0.0, k(0), k(1)});
    }
    BetheRoot r;
    r.k1 = k(0);
    r.k2 = k(1);
    r.lambda = k.squaredNorm();
    r.model = model;
    r.n = p.n;
    r.m = p.m;
    const auto res = model == BetheModel::Gaudin ? gaudin_residual(k(0), k(1), len, alpha)
                                                  : ring_residual(k(0), k(1), len, alpha);
    r.residual = std::max(std::abs(res.r1), std::abs(res.r2));
    if (r.residual > 1e-10)
      throw SolverError("residual " + std::to_string(r.residual) + " above tolerance at lattice point " +
                        label(p));
    if (r.lambda > lambda_max) continue;
    out.push_back(r);
    if (paths) all_paths.push_back(std::move(path));
  }
  std::vector<size_t> idx(out.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) {
    if (out[a].lambda != out[b].lambda) return out[a].lambda < out[b].lambda;
    if (out[a].k1 != out[b].k1) return out[a].k1 < out[b].k1;
    return out[a].k2 < out[b].k2;
  });
  std::vector<BetheRoot> sorted;
  for (size_t i : idx) sorted.push_back(out[i]);
  if (paths) {
    paths->clear();
    for (size_t i : idx) paths->push_back(all_paths[i]);
  }
  return sorted;
}

}  // namespace

std::string to_string(BetheModel m) {
  switch (m) {
    case BetheModel::Gaudin: return "gaudin";
    case BetheModel::LiebLiniger: return "lieb-liniger";
    case BetheModel::GraphZ: return "graph-z";
  }
  return "?";
}

GaudinResidual gaudin_residual(double k1, double k2, double l, double alpha) {
  auto rhs = [&](double kn, double km) { return s_factor(kn + km, alpha) * s_factor(kn - km, alpha); };
  return {std::exp(cplx(0, -2 * k1 * l)) - rhs(k1, k2), std::exp(cplx(0, -2 * k2 * l)) - rhs(k2, k1)};
}

GaudinResidual ring_residual(double k1, double k2, double L, double alpha) {
  // (x + i a)/(x - i a) = 1 / s(x)
  return {std::exp(cplx(0, k1 * L)) - 1.0 / s_factor(k1 - k2, alpha),
          std::exp(cplx(0, k2 * L)) - 1.0 / s_factor(k2 - k1, alpha)};
}

std::vector<BetheRoot> solve_gaudin(double l, double alpha, double lambda_max,
                                    std::vector<std::vector<ContinuationStep>>* paths,
                                    const ContinuationOptions& opt) {
  return solve_bethe(BetheModel::Gaudin, l, alpha, lambda_max, paths, opt);
}

std::vector<BetheRoot> solve_lieb_liniger_ring(double L, double alpha, double lambda_max,
                                               std::vector<std::vector<ContinuationStep>>* paths,
                                               const ContinuationOptions& opt) {
  return solve_bethe(BetheModel::LiebLiniger, L, alpha, lambda_max, paths, opt);
}

// ---------------------------------------------------------------- graph Z

namespace {

std::string dims(int E) {
  const int n = 2 * E;
  std::ostringstream os;
  os << "E = " << E << ": Y(k) acts on C^2 (x) C^" << n << " (x) C^" << n << " (dim " << 2 * n * n
     << "), 1_2 (x) S(k) (x) 1_" << n << " has dim " << 2 * n * n << ", E(k) = 1_2 (x) 1_" << n
     << " (x) T(k) has dim " << 2 * n * n;
  return os.str();
}

bool offdiag_zero(const CMat& A) {
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < A.cols(); ++j)
      if (i != j && std::abs(A(i, j)) > kMatrixTol) return false;
  return true;
}

}  // namespace

GraphZSpec make_graph_z_spec(const MetricGraph& g, const BoundaryConditions& bc,
                             const Eigen::MatrixXd& alpha) {
  const int E = g.num_edges();
  if (bc.P.rows() != 2 * E || bc.L.rows() != 2 * E)
    throw ValidationError("vertex conditions have dimension " + std::to_string(bc.P.rows()) + ", expected " +
                          std::to_string(2 * E));
  bc.validate();
  if (alpha.rows() != E || alpha.cols() != E)
    throw ValidationError("pair interaction matrix is " + std::to_string(alpha.rows()) + "x" +
                          std::to_string(alpha.cols()) + ", expected " + std::to_string(E) + "x" +
                          std::to_string(E));
  if (!alpha.allFinite()) throw ValidationError("pair interaction strengths must be finite");
  if ((alpha - alpha.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ValidationError("pair interaction matrix must be symmetric");

  GraphZSpec spec{g, bc, alpha, GraphZSpec::Layout::Factorised, dims(E)};
  if (alpha.cwiseAbs().maxCoeff() == 0.0) return spec;

  const bool interval = E == 1 && g.edge(0).from != g.edge(0).to && offdiag_zero(bc.P) && offdiag_zero(bc.L);
  if (interval && alpha(0, 0) >= 0.0) {
    spec.layout = GraphZSpec::Layout::Interval;
    spec.dimension_report = "single edge: U(k1, k2) = T(k2) D(k1, k2) S(k2) on C^2";
    return spec;
  }
  throw ValidationError(
      "pair-interaction Z with nonzero alpha is assembled only on a single edge between two distinct "
      "vertices with alpha >= 0; the general tensor layout is not reconciled (" +
      dims(E) + ", alpha has dim " + std::to_string(E * E) + ")");
}

cplx reduced_Z(const GraphZSpec& spec, double k1, double k2) {
  const CMat S = scattering_matrix(spec.bc, k2);
  const CMat T = metric_matrix(spec.graph, k2);
  const int n = static_cast<int>(S.rows());
  CMat U = T * S;
  if (spec.layout == GraphZSpec::Layout::Interval) {
    const double a = spec.alpha(0, 0);
    CMat D = CMat::Zero(2, 2);
    D(0, 0) = s_factor(k2 - k1, a);
    D(1, 1) = s_factor(k2 + k1, a);
    U = T * D * S;
  }
  if (n == 2) {
    const CMat A = CMat::Identity(2, 2) - U;
    return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
  }
  return (CMat::Identity(n, n) - U).partialPivLu().determinant();
}

cplx assemble_Z(const GraphZSpec& spec, double k1, double k2) {
  if (spec.layout == GraphZSpec::Layout::Interval) return reduced_Z(spec, k1, k2);
  const int n = 2 * spec.graph.num_edges();
  const int N = 2 * n * n;
  auto idx = [n](int a, int i, int j) { return (a * n + i) * n + j; };
  const CMat S = scattering_matrix(spec.bc, k2);
  const CMat T = metric_matrix(spec.graph, k2);
  // Y = sigma_x (x) swap; with alpha = 0 it does not depend on k
  CMat Y = CMat::Zero(N, N), SF = CMat::Zero(N, N), Ek = CMat::Zero(N, N);
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Y(idx(1 - a, j, i), idx(a, i, j)) = 1.0;
        for (int p = 0; p < n; ++p) {
          SF(idx(a, i, j), idx(a, p, j)) = S(i, p);
          Ek(idx(a, i, j), idx(a, i, p)) = T(j, p);
        }
      }
  if (Y.rows() != N || SF.rows() != N || Ek.rows() != N)
    throw ValidationError("inconsistent Kronecker dimensions: " + spec.dimension_report);
  const CMat U = Ek * Y * SF * Y;
  return (CMat::Identity(N, N) - U).partialPivLu().determinant();
}

namespace {

Eigen::Vector4d pair_residual(const GraphZSpec& spec, const Eigen::Vector2d& k) {
  const cplx a = reduced_Z(spec, k(0), k(1)), b = reduced_Z(spec, k(1), k(0));
  return {a.real(), a.imag(), b.real(), b.imag()};
}

// Levenberg-Marquardt on the four real residuals.
Eigen::Vector2d refine_pair(const GraphZSpec& spec, Eigen::Vector2d k, double tol) {
  Eigen::Vector4d r = pair_residual(spec, k);
  double phi = r.squaredNorm();
  double mu = 1e-3;
  for (int it = 0; it < 200 && std::sqrt(phi) > 1e-3 * tol; ++it) {
    Eigen::Matrix<double, 4, 2> J;
    for (int c = 0; c < 2; ++c) {
      const double h = 1e-7 * std::max(1.0, std::abs(k(c)));
      Eigen::Vector2d kp = k, km = k;
      kp(c) += h;
      km(c) -= h;
      J.col(c) = (pair_residual(spec, kp) - pair_residual(spec, km)) / (2 * h);
    }
    const Eigen::Matrix2d A = J.transpose() * J;
    const Eigen::Vector2d g = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 30; ++tries) {
      Eigen::Matrix2d B = A;
      B.diagonal() += mu * A.diagonal().cwiseMax(1e-30);
      const Eigen::Vector2d dk = B.ldlt().solve(-g);
      const Eigen::Vector2d kn = k + dk;
      const Eigen::Vector4d rn = pair_residual(spec, kn);
      if (rn.allFinite() && rn.squaredNorm() < phi) {
        k = kn;
        r = rn;
        phi = rn.squaredNorm();
        mu = std::max(mu / 10, 1e-12);
        improved = true;
        if (dk.cwiseAbs().maxCoeff() < 1e-15 * (1.0 + k.cwiseAbs().maxCoeff())) it = 1 << 20;
        break;
      }
      mu *= 10;
    }
    if (!improved) break;
  }
  return k;
}

int one_particle_multiplicity(const GraphZSpec& spec, double k, double radius, int zero_mult) {
  if (std::abs(k) < radius) return zero_mult;
  ScatteringData sd(spec.bc);
  auto f = [&](cplx z) {
    const CMat U = metric_matrix(spec.graph, z) * sd.S(z);
    const int n = static_cast<int>(U.rows());
    return (CMat::Identity(n, n) - U).partialPivLu().determinant();
  };
  Winding w = winding_circle(f, k, radius);
  if (!w.integral) w = winding_circle(f, k, radius / 2);
  if (!w.integral || w.rounded < 1) throw SolverError("non-integral winding at one-particle root " + std::to_string(k));
  return w.rounded;
}

}  // namespace

std::vector<BetheRoot> solve_graph_pair(const GraphZSpec& spec, double lambda_max,
                                        const PairSearchOptions& opt) {
  check_positive(lambda_max, "lambda_max");
  lambda_max *= 1.0 + kBoundSlack;
  const double h = opt.grid > 0.0 ? opt.grid : pi / (8.0 * total_length(spec.graph));
  const double kmax = std::sqrt(lambda_max);
  const int N = static_cast<int>(std::ceil(kmax / h)) + 2;
  // table Z(k_i, k_j)
  Eigen::MatrixXd phi_half(N + 1, N + 1);
  for (int i = 0; i <= N; ++i)
    for (int j = 0; j <= N; ++j) phi_half(i, j) = std::norm(reduced_Z(spec, i * h, j * h));
  auto phi = [&](int i, int j) { return phi_half(i, j) + phi_half(j, i); };

  const bool free_pair = spec.layout == GraphZSpec::Layout::Factorised;
  const int zero_mult = free_pair ? zero_multiplicity(spec.graph, spec.bc) : 0;
  std::vector<Eigen::Vector2d> found;
  for (int i = 0; i <= N; ++i)
    for (int j = i; j <= N; ++j) {
      if (std::hypot(i * h, j * h) > kmax + 2 * h) continue;
      const double v = phi(i, j);
      bool is_min = true;
      for (int di = -1; di <= 1 && is_min; ++di)
        for (int dj = -1; dj <= 1; ++dj) {
          if (di == 0 && dj == 0) continue;
          const int a = i + di, b = j + dj;
          if (a < 0 || b < 0 || a > N || b > N) continue;
          if (phi(a, b) < v) {
            is_min = false;
            break;
          }
        }
      if (!is_min) continue;
      Eigen::Vector2d k = refine_pair(spec, {i * h, j * h}, opt.tol);
      k = k.cwiseAbs();
      if (k(0) > k(1)) std::swap(k(0), k(1));
      const Eigen::Vector4d r = pair_residual(spec, k);
      if (std::sqrt(std::max(r.head<2>().squaredNorm(), r.tail<2>().squaredNorm())) > opt.tol) continue;
      found.push_back(k);
    }

  // merge, then drop the non-physical ones
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
    return a(0) != b(0) ? a(0) < b(0) : a(1) < b(1);
  });
  std::vector<BetheRoot> out;
  const double merge = std::min(h / 4, 1e-3);
  std::vector<bool> used(found.size(), false);
  for (size_t a = 0; a < found.size(); ++a) {
    if (used[a]) continue;
    Eigen::Vector2d best = found[a];
    double best_r = pair_residual(spec, best).norm();
    for (size_t b = a + 1; b < found.size(); ++b)
      if (!used[b] && (found[b] - found[a]).cwiseAbs().maxCoeff() < merge) {
        used[b] = true;
        const double rb = pair_residual(spec, found[b]).norm();
        if (rb < best_r) {
          best = found[b];
          best_r = rb;
        }
      }
    const double zt = 1e-7;
    if (best(1) < zt) continue;  // (0, 0)
    if (best(0) < zt) {
      // k1 = 0 is an eigenstate only for the free pair with a zero mode
      if (!(free_pair && zero_mult > 0)) continue;
      best(0) = 0.0;
    }
    // with interaction the Bethe wavefunction vanishes identically at k1 = k2
    if (!free_pair && best(1) - best(0) < zt) continue;
    BetheRoot r;
    r.k1 = best(0);
    r.k2 = best(1);
    r.lambda = best.squaredNorm();
    if (r.lambda > lambda_max) continue;
    const cplx z12 = reduced_Z(spec, r.k1, r.k2), z21 = reduced_Z(spec, r.k2, r.k1);
    r.residual = std::max(std::abs(z12), std::abs(z21));
    r.model = BetheModel::GraphZ;
    if (free_pair) {
      const double rad = std::min(h / 4, 1e-3);
      const int m1 = one_particle_multiplicity(spec, r.k1, rad, zero_mult);
      const int m2 = one_particle_multiplicity(spec, r.k2, rad, zero_mult);
      r.multiplicity = std::abs(r.k1 - r.k2) < zt ? m1 * (m1 + 1) / 2 : m1 * m2;
    }
    out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const BetheRoot& a, const BetheRoot& b) {
    if (a.lambda != b.lambda) return a.lambda < b.lambda;
    return a.k1 < b.k1;
  });
  return out;
}

}  // namespace qg
