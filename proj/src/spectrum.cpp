#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "qgraph/one_particle.hpp"
#include "qgraph/roots.hpp"

namespace qg {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

std::string to_string(Source s) {
  switch (s) {
    case Source::Secular: return "secular";
    case Source::Oracle: return "oracle";
    case Source::Bethe: return "bethe";
    case Source::Direct: return "direct";
  }
  return "?";
}

int SpectrumResult::count() const {
  int n = 0;
  for (const auto& e : eigenvalues) n += e.multiplicity;
  return n;
}

std::vector<double> SpectrumResult::expanded() const {
  std::vector<double> out;
  for (const auto& e : eigenvalues)
    for (int i = 0; i < e.multiplicity; ++i) out.push_back(e.lambda);
  return out;
}

SpectrumResult scan_spectrum(const MetricGraph& g, const BoundaryConditions& bc, double k_max,
                             const ScanOptions& opt) {
  if (!(k_max > 0)) throw ValidationError("k_max must be positive");
  const double total = total_length(g);
  SpectrumResult res;
  res.grid = opt.grid > 0 ? opt.grid : kPi / (8.0 * total);
  res.k_min = opt.k_min > 0 ? opt.k_min : res.grid / 2;
  res.k_max = k_max;
  if (res.grid > kPi / total) {
    std::ostringstream os;
    os << "grid " << res.grid << " coarser than pi/total_length = " << kPi / total;
    res.warnings.push_back(os.str());
  }
  if (res.k_min >= k_max) return res;
  SecularFunction sf(g, bc);
  ZeroScanOptions zo;
  zo.grid = res.grid;
  zo.accept = opt.tol;
  auto zeros = find_real_zeros([&sf](cplx k) { return sf.proxy(k); }, res.k_min, k_max, zo);
  for (const auto& z : zeros) {
    Eigenvalue ev;
    ev.k = z.x;
    ev.lambda = z.x * z.x;
    ev.multiplicity = z.multiplicity;
    ev.residual = std::abs(sf.value(z.x));
    ev.source = Source::Secular;
    res.eigenvalues.push_back(ev);
  }
  return res;
}

double kappa_bound(const MetricGraph& g, const BoundaryConditions& bc) {
  ScatteringData sd(bc);
  if (sd.lam.empty() || sd.lam.back() <= 0) return 0.0;
  const double m = sd.lam.back();
  double lmin = g.edge(0).length;
  for (const auto& e : g.edges()) lmin = std::min(lmin, e.length);
  return 1.05 * std::sqrt(m * m + 2 * m / lmin) + 1e-6;
}

std::vector<Eigenvalue> negative_spectrum(const MetricGraph& g, const BoundaryConditions& bc,
                                          double kappa_max, double grid) {
  if (!(kappa_max > 0)) throw ValidationError("kappa_max must be positive");
  ScatteringData sd(bc);
  std::vector<Eigenvalue> out;
  if (sd.lam.empty() || sd.lam.back() <= 0) return out;  // L <= 0: no negative spectrum
  double lmin = g.edge(0).length;
  for (const auto& e : g.edges()) lmin = std::min(lmin, e.length);
  const double h = grid > 0 ? grid : std::min(kappa_max / 200.0, 0.05 / std::max(1.0, 1.0 / lmin));
  auto F = [&](cplx kap) { return negative_secular(g, sd, kap); };
  // scale of F on the scan interval, for a relative acceptance bound
  double scale = 0.0;
  for (int i = 1; i <= 16; ++i) scale = std::max(scale, std::abs(F(kappa_max * i / 16.0)));
  ZeroScanOptions zo;
  zo.grid = h;
  zo.accept = 1e-10 * std::max(1.0, scale);
  const double a = std::min(h / 2, kappa_max / 4);
  for (const auto& z : find_real_zeros(F, a, kappa_max, zo)) {
    Eigenvalue ev;
    ev.k = z.x;
    ev.lambda = -z.x * z.x;
    ev.multiplicity = z.multiplicity;
    ev.residual = z.residual;
    ev.source = Source::Secular;
    out.push_back(ev);
  }
  std::sort(out.begin(), out.end(), [](const Eigenvalue& x, const Eigenvalue& y) { return x.lambda < y.lambda; });
  return out;
}

int zero_multiplicity(const MetricGraph& g, const BoundaryConditions& bc) {
  const int E = g.num_edges();
  const int n = 2 * E;
  // unknowns (a_e, b_e) of psi_e = a_e + b_e x
  CMat V = CMat::Zero(n, n), Vd = CMat::Zero(n, n);
  for (int e = 0; e < E; ++e) {
    V(e, e) = 1.0;
    V(E + e, e) = 1.0;
    V(E + e, E + e) = g.edge(e).length;
    Vd(e, E + e) = 1.0;
    Vd(E + e, E + e) = -1.0;
  }
  CMat Pp = CMat::Identity(n, n) - bc.P;
  CMat G = (bc.P + bc.L) * V + Pp * Vd;
  Eigen::JacobiSVD<CMat> svd(G);
  const auto& s = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, s(0));
  int null = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s(i) <= tol) ++null;
  return null;
}

SpectrumResult full_spectrum(const MetricGraph& g, const BoundaryConditions& bc, double k_max,
                             const ScanOptions& opt) {
  SpectrumResult res = scan_spectrum(g, bc, k_max, opt);
  std::vector<Eigenvalue> all;
  const double kb = kappa_bound(g, bc);
  if (kb > 0) all = negative_spectrum(g, bc, kb);
  const int z = zero_multiplicity(g, bc);
  if (z > 0) {
    Eigenvalue ev;
    ev.multiplicity = z;
    ev.source = Source::Direct;
    all.push_back(ev);
  }
  all.insert(all.end(), res.eigenvalues.begin(), res.eigenvalues.end());
  res.eigenvalues = std::move(all);
  return res;
}

int count_zeros(const MetricGraph& g, const BoundaryConditions& bc, double a, double b, double eps) {
  SecularFunction sf(g, bc);
  std::vector<cplx> poly{{a, -eps}, {b, -eps}, {b, eps}, {a, eps}};
  Winding w = winding_polygon([&sf](cplx k) { return sf.proxy(k); }, poly);
  if (!w.integral) throw SolverError("count_zeros: non-integer winding");
  return w.rounded;
}

WeylFit weyl_fit(const SpectrumResult& r, const MetricGraph& g, int max_count) {
  std::vector<double> ks;
  for (const auto& e : r.eigenvalues)
    if (e.lambda > 0)
      for (int i = 0; i < e.multiplicity; ++i) ks.push_back(std::sqrt(e.lambda));
  if (max_count > 0 && static_cast<int>(ks.size()) > max_count) ks.resize(max_count);
  if (ks.size() < 30) throw ValidationError("weyl_fit needs at least 30 positive eigenvalues");
  const int n = static_cast<int>(ks.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = ks[i], y = i + 0.5;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  WeylFit w;
  w.n_used = n;
  w.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  w.expected = total_length(g) / kPi;
  w.rel_error = std::abs(w.slope - w.expected) / w.expected;
  return w;
}

}  // namespace qg
