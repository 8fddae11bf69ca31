#include "qgraph/roots.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <algorithm>
#include <cstdint>
#include <sstream>
#include <utility>
#include <vector>

#include "qgraph/errors.hpp"

namespace qg {

double bracket_root(const std::function<double(double)>& f, double a, double b) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0)) throw SolverError("bracket_root: no sign change on bracket");
  std::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  // pick the endpoint with the smaller residual
  const double x = (std::abs(f(r.first)) <= std::abs(f(r.second))) ? r.first : r.second;
  return x;
}

double minimise(const std::function<double(double)>& f, double a, double b) {
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::brent_find_minima(f, a, b, std::numeric_limits<double>::digits / 2, iters);
  return r.first;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// Accumulate arg increments along a parametrised path, subdividing steps whose
// phase jump exceeds pi/4.
double path_phase(const std::function<std::complex<double>(std::complex<double>)>& f,
                  const std::function<std::complex<double>(double)>& z, int n0) {
  double total = 0.0;
  std::complex<double> prev = f(z(0.0));
  double t = 0.0;
  double dt = 1.0 / n0;
  int guard = 0;
  while (t < 1.0) {
    double tn = std::min(1.0, t + dt);
    std::complex<double> cur = f(z(tn));
    double d = std::arg(cur / prev);
    if ((std::abs(d) > kPi / 4 || prev == 0.0 || cur == 0.0) && dt > 1e-9) {
      dt *= 0.5;
      if (++guard > 200000) throw SolverError("winding: phase tracking failed");
      continue;
    }
    total += d;
    prev = cur;
    t = tn;
    if (std::abs(d) < kPi / 16) dt = std::min(dt * 2.0, 1.0 / n0);
  }
  return total;
}

Winding finish(double phase) {
  Winding w;
  w.value = phase / (2 * kPi);
  w.rounded = static_cast<int>(std::lround(w.value));
  w.integral = std::abs(w.value - w.rounded) < 1e-3;
  return w;
}

}  // namespace

Winding winding_circle(const std::function<std::complex<double>(std::complex<double>)>& f,
                       std::complex<double> c, double r) {
  auto z = [&](double t) { return c + r * std::polar(1.0, 2 * kPi * t); };
  return finish(path_phase(f, z, 64));
}

Winding winding_polygon(const std::function<std::complex<double>(std::complex<double>)>& f,
                        const std::vector<std::complex<double>>& v) {
  double phase = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    const auto a = v[i];
    const auto b = v[(i + 1) % v.size()];
    const int n = std::max(64, static_cast<int>(std::abs(b - a) * 200));
    phase += path_phase(f, [&](double t) { return a + t * (b - a); }, n);
  }
  return finish(phase);
}

namespace {

struct Scanner {
  const std::function<std::complex<double>(std::complex<double>)>& g;
  const ZeroScanOptions& opt;
  std::vector<double> found;

  double re(double x) const { return g(std::complex<double>(x, 0.0)).real(); }

  void scan(double a, double b, int n, int depth) {
    std::vector<double> xs(n + 1), v(n + 1);
    for (int i = 0; i <= n; ++i) {
      xs[i] = (i == n) ? b : a + (b - a) * i / n;
      v[i] = re(xs[i]);
      // a node sitting exactly on a zero hides sign changes; move it slightly
      if (v[i] == 0.0 && i > 0 && i < n) {
        xs[i] += 1e-7 * (b - a) / n;
        v[i] = re(xs[i]);
      }
    }
    std::vector<char> change(n, 0);
    for (int i = 0; i < n; ++i) {
      if (v[i] == 0.0) {
        found.push_back(xs[i]);
        continue;
      }
      if ((v[i] < 0 && v[i + 1] > 0) || (v[i] > 0 && v[i + 1] < 0)) {
        change[i] = 1;
        found.push_back(bracket_root([this](double x) { return re(x); }, xs[i], xs[i + 1]));
      }
    }
    for (int i = 1; i < n; ++i) {
      if (change[i - 1] || change[i] || v[i] == 0.0) continue;
      const double ai = std::abs(v[i]);
      if (!(ai <= std::abs(v[i - 1]) && ai <= std::abs(v[i + 1]))) continue;
      if (depth < opt.refine_levels) {
        scan(xs[i - 1], xs[i + 1], 20, depth + 1);
      } else {
        const double x = minimise([this](double t) { return std::abs(re(t)); }, xs[i - 1], xs[i + 1]);
        if (std::abs(g(std::complex<double>(x, 0.0))) <= opt.accept) found.push_back(x);
      }
    }
  }
};

}  // namespace

std::vector<RealZero> find_real_zeros(
    const std::function<std::complex<double>(std::complex<double>)>& g, double a, double b,
    const ZeroScanOptions& opt) {
  if (!(b > a) || !(opt.grid > 0)) throw ValidationError("find_real_zeros: empty interval or grid");
  const int n = std::max(2, static_cast<int>(std::ceil((b - a) / opt.grid)));
  Scanner sc{g, opt, {}};
  sc.scan(a, b, n, 0);
  std::sort(sc.found.begin(), sc.found.end());

  const double h = (b - a) / n;
  double r = std::min(h / 4, 1e-3);
  std::vector<RealZero> out;
  size_t i = 0;
  while (i < sc.found.size()) {
    size_t j = i + 1;
    while (j < sc.found.size() && sc.found[j] - sc.found[j - 1] < r) ++j;
    double x = sc.found[i];
    for (size_t t = i + 1; t < j; ++t)
      if (std::abs(g({sc.found[t], 0.0})) < std::abs(g({x, 0.0}))) x = sc.found[t];
    Winding w = winding_circle(g, {x, 0.0}, r);
    if (!w.integral) w = winding_circle(g, {x, 0.0}, r / 2);
    if (!w.integral) {
      std::ostringstream os;
      os << "non-integer winding " << w.value << " around x = " << x;
      throw SolverError(os.str());
    }
    // distinct zeros inside one cluster get their own circles
    std::vector<double> pts;
    for (size_t t = i; t < j; ++t)
      if (pts.empty() || sc.found[t] - pts.back() > 1e-7 * std::max(1.0, std::abs(sc.found[t])))
        pts.push_back(sc.found[t]);
    std::vector<std::pair<double, int>> split;
    if (pts.size() > 1 && w.rounded > 1) {
      int total = 0;
      for (size_t t = 0; t < pts.size(); ++t) {
        double gap = r;
        if (t > 0) gap = std::min(gap, pts[t] - pts[t - 1]);
        if (t + 1 < pts.size()) gap = std::min(gap, pts[t + 1] - pts[t]);
        Winding wt = winding_circle(g, {pts[t], 0.0}, 0.4 * gap);
        if (!wt.integral) {
          total = -1;
          break;
        }
        if (wt.rounded > 0) split.emplace_back(pts[t], wt.rounded);
        total += wt.rounded;
      }
      if (total != w.rounded) split.clear();
    }
    if (split.empty() && w.rounded > 0) split.emplace_back(x, w.rounded);
    for (const auto& [xz, mult] : split) {
      RealZero z;
      z.x = xz;
      z.multiplicity = mult;
      z.residual = std::abs(g({xz, 0.0}));
      if (z.residual > opt.accept) {
        std::ostringstream os;
        os << "refinement did not converge near x = " << xz << " (bracket [" << sc.found[i] << ", "
           << sc.found[j - 1] << "], residual " << z.residual << ")";
        throw SolverError(os.str());
      }
      out.push_back(z);
    }
    i = j;
  }
  return out;
}

}  // namespace qg
