#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "qgraph/bethe.hpp"
#include "qgraph/errors.hpp"
#include "qgraph/oracle.hpp"
#include "qgraph/sparse_eigen.hpp"

using namespace qg;
using std::numbers::pi;

namespace {

SpMat laplacian_1d(int n, double h) {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < n; ++i) {
    t.emplace_back(i, i, 2.0 / (h * h));
    if (i > 0) t.emplace_back(i, i - 1, -1.0 / (h * h));
    if (i + 1 < n) t.emplace_back(i, i + 1, -1.0 / (h * h));
  }
  SpMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

// exact 5-point eigenvalues on [0, l]^2 with Dirichlet sides, n cells
std::vector<double> discrete_square(double l, int n, int count, bool antisym = false, bool sym = false) {
  const double h = l / n;
  std::vector<double> v;
  for (int p = 1; p < n; ++p)
    for (int q = 1; q < n; ++q) {
      if (antisym && p >= q) continue;
      if (sym && p > q) continue;
      const double a = std::sin(p * pi * h / (2 * l)), b = std::sin(q * pi * h / (2 * l));
      v.push_back(4.0 / (h * h) * (a * a + b * b));
    }
  std::sort(v.begin(), v.end());
  v.resize(count);
  return v;
}

Profile constant(double c) {
  return [c](double) { return c; };
}

}  // namespace

TEST_CASE("eigen_lowest: diagonal matrix") {
  SpMat A(3, 3);
  A.insert(0, 0) = 1.0;
  A.insert(1, 1) = 2.0;
  A.insert(2, 2) = 3.0;
  auto s = eigen_lowest(A, 2);
  CHECK(s.values(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(s.values(1) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("eigen_lowest: 1D dirichlet laplacian, n = 1000 on [0, pi]") {
  const int n = 1000;
  const double h = pi / (n + 1);
  auto s = eigen_lowest(laplacian_1d(n, h), 4);
  for (int k = 1; k <= 4; ++k) {
    const double exact = 4 / (h * h) * std::pow(std::sin(k * h / 2), 2);
    CHECK(s.values(k - 1) == doctest::Approx(exact).epsilon(1e-11));
    CHECK(std::abs(s.values(k - 1) - k * k) <= k * k * k * k * h * h);
  }
  CHECK(s.max_residual <= 1e-9);
}

TEST_CASE("eigen_lowest: agrees with a dense solve on a 200 x 200 generalized problem") {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> um(0.5, 2.0);
  const int n = 200;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = std::max(0, i - 3); j <= i; ++j) D(i, j) = D(j, i) = nd(rng);
  D.diagonal().array() += 10.0;
  Eigen::VectorXd mass(n);
  for (int i = 0; i < n; ++i) mass(i) = um(rng);
  SpMat A = D.sparseView();
  EigenOptions opt;
  opt.dense_below = 0;
  auto s = eigen_lowest(A, mass, 8, opt);
  Eigen::VectorXd dinv = mass.cwiseSqrt().cwiseInverse();
  Eigen::MatrixXd B = dinv.asDiagonal() * D * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(s.values(i) - es.eigenvalues()(i)) <= 1e-9 * std::abs(es.eigenvalues()(i)));
  // M-orthonormal vectors
  Eigen::MatrixXd G = s.vectors.transpose() * mass.asDiagonal() * s.vectors;
  CHECK((G - Eigen::MatrixXd::Identity(8, 8)).norm() < 1e-10);
  // inertia count agrees with the dense spectrum
  const double mid = 0.5 * (es.eigenvalues()(4) + es.eigenvalues()(5));
  CHECK(count_below(A, mass, mid) == 5);
}

TEST_CASE("eigen_lowest recovers degenerate pairs (square dirichlet, full sector)") {
  const int n = 40;
  auto spec = DomainSpec::square(pi);
  auto v = oracle_eigenvalues(spec, pi / n, 8);
  auto ex = discrete_square(pi, n, 8);
  for (int i = 0; i < 8; ++i) CHECK(v[i] == doctest::Approx(ex[i]).epsilon(1e-10));
}

TEST_CASE("asymmetric input is rejected") {
  SpMat A(2, 2);
  A.insert(0, 1) = 1.0;
  A.insert(1, 0) = 1.0 + 1e-15;
  A.insert(0, 0) = 1.0;
  A.insert(1, 1) = 1.0;
  CHECK_THROWS_AS(eigen_lowest(A, 1), ValidationError);
}

TEST_CASE("square dirichlet: order 2 convergence to n^2 + m^2") {
  auto r = extrapolate(DomainSpec::square(pi), 6, {pi / 20, pi / 40, pi / 80});
  const double exact[] = {2, 5, 5, 8, 10, 10};
  for (int i = 0; i < 6; ++i) {
    CHECK(std::abs(r.orders[i] - 2.0) < 0.05);
    CHECK(!r.flagged[i]);
    CHECK(std::abs(r.values[i] - exact[i]) <= r.errors[i]);
  }
  CHECK(!r.essential_bottom.has_value());
}

TEST_CASE("extrapolate preconditions") {
  CHECK_THROWS_AS(extrapolate(DomainSpec::square(pi), 2, {pi / 10, pi / 20}), ValidationError);
  CHECK_THROWS_AS(extrapolate(DomainSpec::square(pi), 2, {pi / 10, pi / 30, pi / 90}), ValidationError);
  CHECK_THROWS_AS(build_operator(DomainSpec::square(pi), 0.3), ValidationError);
  CHECK_THROWS_AS(build_operator(DomainSpec::pencil(1.0, 2.5), 0.25), ValidationError);
}

TEST_CASE("assembled matrices are exactly symmetric; sectors reproduce the discrete spectrum") {
  const int n = 30;
  for (Sector s : {Sector::Full, Sector::Bosonic, Sector::Fermionic, Sector::HardcoreBosonic}) {
    auto om = build_operator(DomainSpec::square(pi, s), pi / n);
    SpMat At = om.A.transpose();
    CHECK((om.A - At).norm() == 0.0);
  }
  auto vb = oracle_eigenvalues(DomainSpec::square(pi, Sector::Bosonic), pi / n, 6);
  auto vf = oracle_eigenvalues(DomainSpec::square(pi, Sector::Fermionic), pi / n, 6);
  auto eb = discrete_square(pi, n, 6, false, true), ef = discrete_square(pi, n, 6, true);
  for (int i = 0; i < 6; ++i) {
    CHECK(vb[i] == doctest::Approx(eb[i]).epsilon(1e-10));
    CHECK(vf[i] == doctest::Approx(ef[i]).epsilon(1e-10));
  }
}

TEST_CASE("hardcore bosonic and fermionic matrices are identical") {
  for (double h : {pi / 16, pi / 40}) {
    auto sb = DomainSpec::square(pi, Sector::HardcoreBosonic);
    auto sf = DomainSpec::square(pi, Sector::Fermionic);
    sb.alpha = sf.alpha = constant(3.0);
    auto a = build_operator(sb, h), b = build_operator(sf, h);
    REQUIRE(a.A.nonZeros() == b.A.nonZeros());
    SpMat d = a.A - b.A;
    CHECK(d.norm() == 0.0);
    CHECK((a.mass - b.mass).norm() == 0.0);
  }
  auto pb = DomainSpec::pencil(1.0, 6.0, Sector::HardcoreBosonic), pf = DomainSpec::pencil(1.0, 6.0);
  pb.sigma = pf.sigma = constant(0.7);
  auto a = build_operator(pb, 0.125), b = build_operator(pf, 0.125);
  CHECK(SpMat(a.A - b.A).norm() == 0.0);
}

TEST_CASE("domain monotonicity: dirichlet constraints never lower eigenvalues") {
  const double h = pi / 24;
  auto full = DomainSpec::square(pi);
  full.alpha = constant(1.5);
  auto wall = full;
  wall.hard_wall = true;
  wall.d = pi / 2;
  auto bos = DomainSpec::square(pi, Sector::Bosonic);
  bos.alpha = constant(1.5);
  auto hc = DomainSpec::square(pi, Sector::HardcoreBosonic);
  auto vf = oracle_eigenvalues(full, h, 8), vw = oracle_eigenvalues(wall, h, 8);
  auto vb = oracle_eigenvalues(bos, h, 8), vh = oracle_eigenvalues(hc, h, 8);
  for (int i = 0; i < 8; ++i) {
    CHECK(vw[i] >= vf[i] - 1e-12 * vf[i]);
    CHECK(vh[i] >= vb[i] - 1e-12 * vb[i]);
    CHECK(vh[i] >= vf[i] - 1e-12 * vf[i]);
  }
  // pencil: fermionic above bosonic, hard wall from the square
  auto pb = DomainSpec::pencil(1.0, 6.0, Sector::Bosonic), pf = DomainSpec::pencil(1.0, 6.0);
  auto eb = oracle_eigenvalues(pb, 0.125, 4), ef = oracle_eigenvalues(pf, 0.125, 4);
  for (int i = 0; i < 4; ++i) CHECK(ef[i] >= eb[i]);
}

TEST_CASE("bosonic square with contact matches the gaudin roots within the error estimate") {
  for (double a : {0.5, 2.0}) {
    auto spec = DomainSpec::square(pi, Sector::Bosonic);
    spec.alpha = constant(bethe_to_oracle_alpha(a));
    auto r = extrapolate(spec, 6, {pi / 40, pi / 80, pi / 160});
    auto b = solve_gaudin(pi, a, 40.0);
    REQUIRE(b.size() >= 6);
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(r.values[i] - b[i].lambda) <= r.errors[i]);
      CHECK(r.errors[i] <= 2e-3 * b[i].lambda);
    }
  }
}

TEST_CASE("periodic square with contact matches the lieb-liniger ring") {
  const double L = 2 * pi, a = 1.0;
  auto spec = DomainSpec::periodic(L, Sector::Bosonic);
  spec.alpha = constant(bethe_to_oracle_alpha(a));
  auto r = extrapolate(spec, 6, {L / 32, L / 64, L / 128});
  auto b = solve_lieb_liniger_ring(L, a, 20.0);
  REQUIRE(b.size() >= 6);
  for (int i = 0; i < 6; ++i) CHECK(std::abs(r.values[i] - b[i].lambda) <= r.errors[i] + 1e-9);
}

TEST_CASE("jump relation across the diagonal for the bosonic contact operator") {
  const double ao = 4.0;
  double prev = 1e9;
  for (int n : {100, 200}) {
    auto spec = DomainSpec::square(pi, Sector::Bosonic);
    spec.alpha = constant(ao);
    auto om = build_operator(spec, pi / n);
    auto s = eigen_lowest(om.A, om.mass, 1);
    auto value = [&](int i, int j) {
      for (size_t p = 0; p < om.nodes.size(); ++p)
        if (om.nodes[p] == std::make_pair(i, j)) return s.vectors(static_cast<int>(p), 0) / (i == j ? 1.0 : std::sqrt(2.0));
      return 0.0;
    };
    const int c = n / 2;
    const double h = pi / n;
    const double f0 = value(c, c), f1 = value(c - 1, c + 1), f2 = value(c - 2, c + 2);
    const double deriv = (-3 * f0 + 4 * f1 - f2) / (2 * h);
    const double rel = std::abs(deriv - 0.5 * ao * f0) / std::abs(0.5 * ao * f0);
    CHECK(rel < 0.05);
    CHECK(rel < prev);
    prev = rel;
  }
}

TEST_CASE("weyl count on the square: N(lambda)/lambda -> l^2/(4 pi) within 5%") {
  const double lam = 2500.0, h = pi / 500;
  auto d = DomainSpec::square(pi);
  d.alpha = constant(1.0);
  auto r = DomainSpec::square(pi);
  r.outer = OuterBoundary::Robin;
  r.sigma = constant(0.5);
  r.alpha = constant(2.0);
  for (const auto& spec : {d, r}) {
    const int N = oracle_count_below(spec, h, lam);
    CHECK(N >= 200);
    CHECK(std::abs(N / lam - pi / 4) <= 0.05 * pi / 4);
  }
}

TEST_CASE("pencil: one bound fermionic level inside the bounds, insensitive to truncation") {
  auto s12 = DomainSpec::pencil(1.0, 12.0), s24 = DomainSpec::pencil(1.0, 24.0);
  const std::vector<double> hs = {1.0 / 16, 1.0 / 32, 1.0 / 64};
  auto r = extrapolate(s12, 3, hs);
  const double ess = 2 * pi * pi;
  REQUIRE(r.essential_bottom.has_value());
  CHECK(*r.essential_bottom == doctest::Approx(ess).epsilon(1e-15));
  CHECK(r.values[0] < ess);
  CHECK(r.values[1] > ess);
  CHECK(r.values[0] >= 0.5 * pi * pi);
  CHECK(r.values[0] <= 1.86 * pi * pi);
  // corner singularity: the order is reported as off
  CHECK(r.flagged[0]);
  const double e12 = oracle_eigenvalues(s12, 1.0 / 32, 1)[0], e24 = oracle_eigenvalues(s24, 1.0 / 32, 1)[0];
  CHECK(std::abs(e12 - e24) < 1e-6);
}

TEST_CASE("pencil: repulsive boundary removes the bound state, attractive lowers it") {
  const double h = 1.0 / 32;
  auto base = DomainSpec::pencil(1.0, 12.0);
  auto rep = base, att = base;
  rep.sigma = constant(-5.0);
  att.sigma = constant(1.0);
  const double e0 = oracle_eigenvalues(base, h, 1)[0];
  CHECK(oracle_eigenvalues(rep, h, 1)[0] >= 2 * pi * pi);
  CHECK(oracle_eigenvalues(att, h, 1)[0] < e0);
}

TEST_CASE("pencil_spectrum window solver agrees with the lowest-m solver; gap and decreasing E0") {
  double prev = 1e9;
  for (double L : {6.0, 12.0, 24.0}) {
    auto w = pencil_spectrum(1.0, L, {}, Sector::Fermionic, 0.125, 2 * pi * pi + 1.0);
    auto spec = DomainSpec::pencil(1.0, L);
    auto v = pencil_lowest(spec, 0.125, 2);
    REQUIRE(w.size() >= 2);
    CHECK(w[0] == doctest::Approx(v[0]).epsilon(1e-10));
    CHECK(w[1] == doctest::Approx(v[1]).epsilon(1e-10));
    CHECK(w[0] <= prev + 1e-12);
    prev = w[0];
    CHECK(w[1] - w[0] > 1.0);
  }
  CHECK(pencil_spectrum(1.0, 6.0, {}, Sector::Fermionic, 0.125, -100.0).empty());
}

TEST_CASE("coordinate export and physical units") {
  auto om = build_operator(DomainSpec::square(1.0), 0.25);
  std::ostringstream os;
  export_coordinate(om, os);
  int lines = 0;
  for (char c : os.str()) lines += c == '\n';
  CHECK(lines == om.A.nonZeros());
  CHECK(physical_energy_ev(1.0, 1.0) == doctest::Approx(0.0380998212));
  CHECK(parse_sector("fermionic") == Sector::Fermionic);
  CHECK_THROWS_AS(parse_sector("anyonic"), ValidationError);
}
