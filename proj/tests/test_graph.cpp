#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "qgraph/graph.hpp"
#include "qgraph/one_particle.hpp"
#include "random_graphs.hpp"

using namespace qg;

namespace {

MetricGraph interval(double l) { return MetricGraph(2, {{0, 1, l}}); }

MetricGraph star3() { return MetricGraph(4, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}}); }

}  // namespace

TEST_CASE("dirichlet interval gives P = I, L = 0") {
  auto bc = assemble_conditions(interval(1.0), {Dirichlet{}, Dirichlet{}});
  CHECK((bc.P - CMat::Identity(2, 2)).norm() == 0.0);
  CHECK(bc.L.norm() == 0.0);
}

TEST_CASE("kirchhoff interval (degree 1) gives P = 0, L = 0") {
  auto bc = assemble_conditions(interval(1.0), {Kirchhoff{}, Kirchhoff{}});
  CHECK(bc.P.norm() == 0.0);
  CHECK(bc.L.norm() == 0.0);
}

TEST_CASE("delta block on a 3-star encodes continuity and the derivative sum") {
  const double c = 0.7;
  auto g = star3();
  auto bc = assemble_conditions(g, {Delta{c}, Dirichlet{}, Dirichlet{}, Dirichlet{}});
  auto s = g.incident_slots(0);
  REQUIRE(s.size() == 3);
  CMat Pv(3, 3), Lv(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      Pv(i, j) = bc.P(s[i], s[j]);
      Lv(i, j) = bc.L(s[i], s[j]);
    }
  CMat J = CMat::Ones(3, 3);
  CHECK((Pv - (CMat::Identity(3, 3) - J / 3.0)).norm() < 1e-15);
  CHECK((Lv + (c / 9.0) * J).norm() < 1e-15);
  // continuous values u, inward derivatives summing to c u: the condition holds
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const double u = nd(rng);
    CVec psi = CVec::Constant(3, u);
    CVec dpsi(3);
    dpsi(0) = nd(rng);
    dpsi(1) = nd(rng);
    dpsi(2) = c * u - dpsi(0) - dpsi(1);
    CMat Pp = CMat::Identity(3, 3) - Pv;
    CHECK(((Pv + Lv) * psi + Pp * dpsi).norm() < 1e-13);
    // and a discontinuous or wrong-sum pair violates it
    CVec bad = dpsi;
    bad(2) += 1.0;
    CHECK(((Pv + Lv) * psi + Pp * bad).norm() > 1e-3);
  }
}

TEST_CASE("delta with zero strength reduces to kirchhoff") {
  auto g = star3();
  auto a = assemble_conditions(g, {Delta{0.0}, Dirichlet{}, Kirchhoff{}, Dirichlet{}});
  auto b = assemble_conditions(g, {Kirchhoff{}, Dirichlet{}, Kirchhoff{}, Dirichlet{}});
  CHECK((a.P - b.P).norm() == 0.0);
  CHECK((a.L - b.L).norm() == 0.0);
}

TEST_CASE("robin values land on the diagonal of L") {
  auto bc = assemble_conditions(interval(2.0), {Robin{{1.5}}, Dirichlet{}});
  CHECK(bc.P(0, 0) == 0.0);
  CHECK(bc.L(0, 0) == cplx(1.5));
  CHECK(bc.P(1, 1) == 1.0);
}

TEST_CASE("invalid input is rejected") {
  CHECK_THROWS_AS(MetricGraph(2, {{0, 1, -1.0}}), ValidationError);
  CHECK_THROWS_AS(MetricGraph(2, {{0, 1, 0.0}}), ValidationError);
  CHECK_THROWS_AS(MetricGraph(2, {{0, 5, 1.0}}), ValidationError);
  auto g = interval(1.0);
  CHECK_THROWS_AS(assemble_conditions(g, {Dirichlet{}}), ValidationError);
  CHECK_THROWS_AS(assemble_conditions(g, {Robin{{1.0, 2.0}}, Dirichlet{}}), ValidationError);
  Custom notproj{CMat::Constant(1, 1, 0.5), CMat::Zero(1, 1)};
  CHECK_THROWS_AS(assemble_conditions(g, {notproj, Dirichlet{}}), ValidationError);
  Custom badL{CMat::Identity(1, 1), CMat::Constant(1, 1, 1.0)};  // L not inside ker P
  CHECK_THROWS_AS(assemble_conditions(g, {badL, Dirichlet{}}), ValidationError);
  Custom wrongdim{CMat::Identity(2, 2), CMat::Zero(2, 2)};
  CHECK_THROWS_AS(assemble_conditions(g, {wrongdim, Dirichlet{}}), ValidationError);
  CHECK_THROWS_AS(scale_graph(g, 0.0), ValidationError);
  CHECK_THROWS_AS(scale_graph(g, -2.0), ValidationError);
}

TEST_CASE("scale_graph and total_length") {
  MetricGraph g(3, {{0, 1, 1.0}, {1, 2, 0.5}});
  auto s1 = scale_graph(g, 1.0);
  CHECK(s1.edge(0).length == 1.0);
  CHECK(s1.edge(1).length == 0.5);
  auto s2 = scale_graph(g, 2.0);
  CHECK(s2.edge(0).length == 2.0);
  CHECK(s2.edge(1).length == 1.0);
  CHECK(total_length(s2) == 3.0);
  CHECK(total_length(interval(1.0)) == 1.0);
  MetricGraph h(4, {{0, 1, 1.0}, {1, 2, 0.5}, {2, 3, 0.25}});
  CHECK(total_length(h) == 1.75);
  CHECK(total_length(scale_graph(h, 3.0)) == doctest::Approx(3.0 * 1.75).epsilon(1e-15));
}

TEST_CASE("scaled dirichlet interval: ground state 1 -> 0.25") {
  const double pi = 3.14159265358979323846;
  auto g = interval(pi);
  auto bc = assemble_conditions(g, {Dirichlet{}, Dirichlet{}});
  auto r1 = scan_spectrum(g, bc, 1.5);
  auto r2 = scan_spectrum(scale_graph(g, 2.0), bc, 0.75);
  REQUIRE(!r1.eigenvalues.empty());
  REQUIRE(!r2.eigenvalues.empty());
  CHECK(r1.eigenvalues[0].lambda == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r2.eigenvalues[0].lambda == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("property: assembled random custom blocks pass the invariants") {
  std::mt19937_64 rng(20240601);
  for (int trial = 0; trial < 200; ++trial) {
    MetricGraph g(3, {{0, 1, 1.0}, {1, 2, 1.3}, {0, 2, 0.7}});
    std::vector<VertexConditionSpec> specs;
    for (int v = 0; v < 3; ++v) {
      auto bc = qgtest::random_conditions(g.degree(v), rng);
      specs.push_back(Custom{bc.P, bc.L});
    }
    auto bc = assemble_conditions(g, specs);
    CHECK_NOTHROW(bc.validate());
  }
}

TEST_CASE("property: scale_graph is a group action") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    auto gc = qgtest::random_graph(rng);
    const double a = u(rng), b = u(rng);
    auto x = scale_graph(scale_graph(gc.graph, a), b);
    auto y = scale_graph(gc.graph, a * b);
    for (int e = 0; e < x.num_edges(); ++e)
      CHECK(x.edge(e).length == doctest::Approx(y.edge(e).length).epsilon(1e-15));
  }
}

TEST_CASE("property: relabelling vertices leaves (P, L) unchanged; permuting edges permutes it") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto gc = qgtest::random_graph(rng);
    const auto& g = gc.graph;
    auto bc = assemble_conditions(g, gc.specs);
    const int V = g.num_vertices(), E = g.num_edges();
    // vertex relabelling: reverse ids
    std::vector<Edge> ed = g.edges();
    for (auto& e : ed) {
      e.from = V - 1 - e.from;
      e.to = V - 1 - e.to;
    }
    std::vector<VertexConditionSpec> sp(gc.specs.rbegin(), gc.specs.rend());
    auto bc2 = assemble_conditions(MetricGraph(V, ed), sp);
    CHECK((bc.P - bc2.P).norm() < 1e-15);
    CHECK((bc.L - bc2.L).norm() < 1e-15);
    // edge reversal of order: slots permute accordingly (specs without per-slot data)
    bool slot_free = true;
    for (const auto& s : gc.specs) slot_free = slot_free && !std::holds_alternative<Robin>(s);
    if (!slot_free) continue;
    std::vector<Edge> er(g.edges().rbegin(), g.edges().rend());
    auto bc3 = assemble_conditions(MetricGraph(V, er), gc.specs);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(2 * E);
    for (int e = 0; e < E; ++e) {
      perm.indices()(e) = E - 1 - e;
      perm.indices()(E + e) = E + (E - 1 - e);
    }
    CMat Pp = perm * bc.P * perm.transpose();
    CMat Lp = perm * bc.L * perm.transpose();
    CHECK((Pp - bc3.P).norm() < 1e-14);
    CHECK((Lp - bc3.L).norm() < 1e-14);
  }
}
