#include "qgraph/sparse_eigen.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "qgraph/errors.hpp"

namespace qg {

namespace {

// LDL^T of B - s I, B = M^{-1/2} A M^{-1/2}.
class ShiftedFactor {
 public:
  explicit ShiftedFactor(const SpMat& B) : B_(B) {
    id_.resize(B.rows(), B.cols());
    id_.setIdentity();
  }

  // Factorises at s, nudging off an exactly singular pivot. Returns the shift used.
  double factor(double s) {
    for (int attempt = 0; attempt < 6; ++attempt) {
      const SpMat K = B_ - s * id_;
      if (!analysed_) {
        ldlt_.analyzePattern(K);
        analysed_ = true;
      }
      ldlt_.factorize(K);
      if (ldlt_.info() == Eigen::Success) return s;
      s += 1e-10 * std::max(1.0, std::abs(s));
    }
    throw SolverError("shifted factorisation failed near " + std::to_string(s));
  }

  int negatives() const {
    const auto& d = ldlt_.vectorD();
    int n = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i)
      if (d(i) < 0.0) ++n;
    return n;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& x) const { return ldlt_.solve(x); }

 private:
  const SpMat& B_;
  SpMat id_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
  bool analysed_ = false;
};

SpMat scaled(const SpMat& A, const Eigen::VectorXd& mass) {
  if (mass.size() != A.rows()) throw ValidationError("mass vector has the wrong length");
  if ((mass.array() <= 0.0).any()) throw ValidationError("mass entries must be positive");
  const Eigen::VectorXd d = mass.cwiseSqrt().cwiseInverse();
  SpMat B = d.asDiagonal() * A * d.asDiagonal();
  return B;
}

double inf_norm(const SpMat& B) {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(B.rows());
  for (int k = 0; k < B.outerSize(); ++k)
    for (SpMat::InnerIterator it(B, k); it; ++it) rows(it.row()) += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

void orthogonalise(Eigen::Ref<Eigen::VectorXd> w, const Eigen::MatrixXd& X) {
  if (X.cols() == 0) return;
  for (int pass = 0; pass < 2; ++pass) w -= X * (X.transpose() * w);
}

struct RitzPairs {
  std::vector<double> theta;
  std::vector<Eigen::VectorXd> y;
};

// Largest `want` eigenpairs of the operator (B - s)^{-1} restricted to X-perp.
RitzPairs lanczos(const ShiftedFactor& f, const Eigen::MatrixXd& X, int n, int want, int basis,
                  const EigenOptions& opt, std::mt19937_64& rng, int& restarts) {
  std::normal_distribution<double> nd;
  auto fresh = [&](const Eigen::MatrixXd& V, int cols) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = nd(rng);
    orthogonalise(v, X);
    if (cols > 0) orthogonalise(v, V.leftCols(cols));
    return Eigen::VectorXd(v / v.norm());
  };
  Eigen::MatrixXd V(n, basis + 1);
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(basis + 1, basis + 1);
  V.col(0) = fresh(V, 0);
  int j0 = 0;
  for (int round = 0; round <= opt.max_restarts; ++round) {
    double beta = 0.0;
    for (int j = j0; j < basis; ++j) {
      Eigen::VectorXd w = f.solve(V.col(j));
      orthogonalise(w, X);
      Eigen::VectorXd c = V.leftCols(j + 1).transpose() * w;
      w -= V.leftCols(j + 1) * c;
      const Eigen::VectorXd c2 = V.leftCols(j + 1).transpose() * w;
      w -= V.leftCols(j + 1) * c2;
      c += c2;
      for (int i = 0; i <= j; ++i) H(i, j) = H(j, i) = c(i);
      beta = w.norm();
      if (beta <= 1e-14 * std::max(1.0, std::abs(c(j)))) {
        // invariant subspace: continue with a fresh direction
        V.col(j + 1) = fresh(V, j + 1);
        beta = 0.0;
      } else {
        V.col(j + 1) = w / beta;
      }
      H(j + 1, j) = H(j, j + 1) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.topLeftCorner(basis, basis));
    // descending order of theta
    const Eigen::VectorXd th = es.eigenvalues().reverse();
    const Eigen::MatrixXd S = es.eigenvectors().rowwise().reverse();
    int conv = 0;
    for (int i = 0; i < want; ++i)
      if (std::abs(beta * S(basis - 1, i)) <= opt.tol * std::abs(th(i))) ++conv;
    if (conv == want) {
      RitzPairs rp;
      for (int i = 0; i < want; ++i) {
        rp.theta.push_back(th(i));
        rp.y.push_back(V.leftCols(basis) * S.col(i));
      }
      return rp;
    }
    ++restarts;
    const int keep = std::min(basis - 1, want + (basis - want) / 2);
    const Eigen::MatrixXd Vk = V.leftCols(basis) * S.leftCols(keep);
    const Eigen::VectorXd last = V.col(basis);
    V.leftCols(keep) = Vk;
    V.col(keep) = last;
    H.setZero();
    for (int i = 0; i < keep; ++i) H(i, i) = th(i);
    j0 = keep;
  }
  throw SolverError("Lanczos did not converge within " + std::to_string(opt.max_restarts) + " restarts");
}

}  // namespace

void require_symmetric(const SpMat& A) {
  if (A.rows() != A.cols()) throw ValidationError("matrix is not square");
  const SpMat At = A.transpose();
  if ((A - At).norm() != 0.0) throw ValidationError("matrix is not exactly symmetric");
}

int count_below(const SpMat& A, const Eigen::VectorXd& mass, double sigma) {
  require_symmetric(A);
  const SpMat B = scaled(A, mass);
  ShiftedFactor f(B);
  f.factor(sigma);
  return f.negatives();
}

EigenSolution eigen_lowest(const SpMat& A, int m, const EigenOptions& opt) {
  return eigen_lowest(A, Eigen::VectorXd::Ones(A.rows()), m, opt);
}

EigenSolution eigen_lowest(const SpMat& A, const Eigen::VectorXd& mass, int m, const EigenOptions& opt) {
  require_symmetric(A);
  const int n = static_cast<int>(A.rows());
  if (m < 1 || m > n) throw ValidationError("requested eigenpair count out of range");
  const SpMat B = scaled(A, mass);
  const double bnorm = std::max(inf_norm(B), 1e-300);

  // small problems: dense
  if (n <= opt.dense_below) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(B)};
    EigenSolution sol;
    sol.values = es.eigenvalues().head(m);
    sol.vectors = mass.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().leftCols(m);
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd r = A * sol.vectors.col(i) - sol.values(i) * mass.cwiseProduct(sol.vectors.col(i));
      sol.max_residual = std::max(sol.max_residual, r.norm() / bnorm);
    }
    return sol;
  }

  ShiftedFactor f(B);
  // shift strictly below the spectrum
  double s = -1.0;
  s = f.factor(s);
  while (f.negatives() > 0) {
    s *= 4.0;
    s = f.factor(s);
  }
  const int basis = std::min(n - 1, opt.basis > 0 ? opt.basis : std::max(2 * m + 16, 32));
  std::mt19937_64 rng(opt.seed);
  int restarts = 0;

  std::vector<double> lam;
  std::vector<Eigen::VectorXd> vecs;
  for (int round = 0; round < 6; ++round) {
    Eigen::MatrixXd X(n, static_cast<int>(vecs.size()));
    for (size_t i = 0; i < vecs.size(); ++i) X.col(static_cast<int>(i)) = vecs[i];
    const int want = std::min<int>(m, n - static_cast<int>(vecs.size()) - 1);
    if (want <= 0) break;
    // f holds the factor at s; recompute if an inertia check replaced it
    f.factor(s);
    RitzPairs rp = lanczos(f, X, n, want, std::min(basis, n - static_cast<int>(vecs.size()) - 1), opt, rng,
                           restarts);
    for (size_t i = 0; i < rp.theta.size(); ++i) {
      lam.push_back(s + 1.0 / rp.theta[i]);
      vecs.push_back(rp.y[i]);
    }
    // order and re-check completeness below the m-th value
    std::vector<size_t> idx(lam.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return lam[a] < lam[b]; });
    std::vector<double> l2;
    std::vector<Eigen::VectorXd> v2;
    for (size_t i : idx) {
      l2.push_back(lam[i]);
      v2.push_back(vecs[i]);
    }
    lam = l2;
    vecs = v2;
    if (static_cast<int>(lam.size()) < m) continue;
    const double top = lam[m - 1];
    const double probe = top + 1e-9 * std::max(1.0, std::abs(top));
    int found = 0;
    for (double x : lam)
      if (x < probe) ++found;
    f.factor(probe);
    const int truth = f.negatives();
    if (truth <= found) {
      EigenSolution sol;
      sol.shift = s;
      sol.restarts = restarts;
      sol.values.resize(m);
      sol.vectors.resize(n, m);
      const Eigen::VectorXd dinv = mass.cwiseSqrt().cwiseInverse();
      for (int i = 0; i < m; ++i) {
        sol.values(i) = lam[i];
        sol.vectors.col(i) = dinv.cwiseProduct(vecs[i]);
        const Eigen::VectorXd r = B * vecs[i] - lam[i] * vecs[i];
        sol.max_residual = std::max(sol.max_residual, r.norm() / bnorm);
      }
      if (sol.max_residual > 1e-9)
        throw SolverError("eigenpair residual " + std::to_string(sol.max_residual) + " above 1e-9");
      return sol;
    }
  }
  throw SolverError("could not confirm the " + std::to_string(m) + " lowest eigenvalues by inertia");
}

}  // namespace qg
