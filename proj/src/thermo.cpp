#include "qgraph/thermo.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <sstream>

#include "qgraph/errors.hpp"

namespace qg {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_sizes(const std::vector<double>& s, const char* what) {
  if (s.size() < 4) throw ValidationError(std::string(what) + ": at least 4 sizes are needed");
  for (size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0) || !std::isfinite(s[i])) throw ValidationError(std::string(what) + ": sizes must be positive");
    if (i > 0 && !(s[i] > s[i - 1])) throw ValidationError(std::string(what) + ": sizes must increase strictly");
  }
}

// one task per size; results in input order
template <class F>
auto map_sizes(const std::vector<double>& sizes, F f) {
  using R = decltype(f(0.0));
  std::vector<std::future<R>> fut;
  for (double s : sizes) fut.push_back(std::async(std::launch::async, f, s));
  std::vector<R> out;
  for (auto& x : fut) out.push_back(x.get());
  return out;
}

// log1p(exp(x)) without overflow
double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

}  // namespace

double bose_density(double l, double mu, double beta, double size) {
  return 1.0 / (size * std::expm1(beta * (l - mu)));
}

ThermoState solve_mu(std::vector<double> levels, double beta, double rho, double size, const TailBound& tail) {
  if (levels.empty()) throw ValidationError("solve_mu: empty spectrum");
  if (!(beta > 0) || !(rho > 0) || !(size > 0)) throw ValidationError("solve_mu: beta, rho and size must be positive");
  for (double l : levels)
    if (!std::isfinite(l)) throw ValidationError("solve_mu: non-finite level");
  std::sort(levels.begin(), levels.end());
  const double l0 = levels.front();

  // density as a function of t = l0 - mu > 0; strictly decreasing
  auto density = [&](double t) {
    long double s = 0;
    for (double l : levels) s += 1.0L / std::expm1(beta * ((l - l0) + t));
    double r = static_cast<double>(s / size);
    if (tail) r += tail(l0 - t);
    return r;
  };
  double hi = 1.0 / beta;
  for (int i = 0; density(hi) >= rho; ++i) {
    if (i > 2000) throw SolverError("solve_mu: no lower bracket for mu");
    hi *= 2.0;
  }
  double lo = hi;
  for (int i = 0; density(lo) <= rho; ++i) {
    if (i > 2000 || lo < 1e-300) throw SolverError("solve_mu: no upper bracket for mu");
    lo *= 0.5;
  }
  auto g = [&](double u) { return density(std::exp(u)) - rho; };
  std::uintmax_t iters = 200;
  auto br = boost::math::tools::toms748_solve(g, std::log(lo), std::log(hi), g(std::log(lo)), g(std::log(hi)),
                                              boost::math::tools::eps_tolerance<double>(52), iters);
  // pick the better end
  const double u = std::abs(g(br.first)) <= std::abs(g(br.second)) ? br.first : br.second;
  const double t = std::exp(u);

  ThermoState st;
  st.beta = beta;
  st.rho = rho;
  st.size = size;
  st.mu = l0 - t;
  st.occupations.reserve(levels.size());
  long double sum = 0;
  for (double l : levels) {
    const double o = 1.0 / (size * std::expm1(beta * ((l - l0) + t)));
    st.occupations.push_back(o);
    sum += o;
  }
  st.levels = std::move(levels);
  if (tail) {
    st.tail_estimate = tail(st.mu);
    sum += st.tail_estimate;
  }
  st.residual = std::abs(static_cast<double>(sum) - rho) / rho;
  if (st.tail_estimate > 1e-8 * rho) {
    std::ostringstream os;
    os << "spectrum truncation: tail density estimate " << st.tail_estimate << " exceeds 1e-8 rho";
    st.warnings.push_back(os.str());
  }
  if (st.residual > 1e-10) {
    std::ostringstream os;
    os << "density residual " << st.residual << " above 1e-10";
    throw SolverError(os.str());
  }
  return st;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Condensation: return "condensation";
    case Verdict::NoCondensation: return "no condensation";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

void classify(SweepResult& r, double rho, const VerdictRule& rule) {
  const size_t n = r.rho0.size();
  if (n < 3 || r.sizes.size() != n) throw ValidationError("classify: need at least 3 sizes with rho0");
  const size_t a = n - 3;
  r.limsup_estimate = std::min({r.rho0[a], r.rho0[a + 1], r.rho0[a + 2]});
  r.decreasing = r.rho0[a + 1] < r.rho0[a] && r.rho0[a + 2] < r.rho0[a + 1];
  // least-squares slope of log rho0 against log size
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  bool positive = true;
  for (size_t i = a; i < n; ++i) {
    if (!(r.rho0[i] > 0)) positive = false;
    const double x = std::log(r.sizes[i]), y = std::log(std::max(r.rho0[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  r.decay_slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  std::ostringstream os;
  os << "min rho0 over 3 largest sizes = " << r.limsup_estimate << " (" << r.limsup_estimate / rho
     << " rho); log-log slope = " << r.decay_slope << "; decreasing = " << (r.decreasing ? "yes" : "no");
  r.diagnostics.push_back(os.str());
  // a 1/size decay wins over a still-large finite-size value
  if (positive && r.decreasing &&
      (r.rho0[n - 1] < rule.empty_fraction * rho || r.decay_slope <= rule.decay_slope)) {
    r.verdict = Verdict::NoCondensation;
  } else if (r.limsup_estimate > rule.condensed_fraction * rho) {
    r.verdict = Verdict::Condensation;
  } else {
    r.verdict = Verdict::Inconclusive;
  }
}

double weyl_tail_1d(double lambda_top, double mu, double beta) {
  if (!(lambda_top > 0) || !(lambda_top > mu)) return std::numeric_limits<double>::infinity();
  const double x = beta * (lambda_top - mu);
  // 1/(e^y - 1) <= e^{-y}/(1 - e^{-x}) for y >= x; 1/sqrt(l) <= 1/sqrt(top)
  return std::exp(-x) / (-std::expm1(-x)) / (2 * kPi * beta * std::sqrt(lambda_top));
}

SweepResult sweep_thermo(const MetricGraph& g, const BoundaryConditions& bc, double beta, double rho,
                         const std::vector<double>& etas, const SweepOptions& opt) {
  require_sizes(etas, "sweep_thermo");
  if (!(beta > 0) || !(rho > 0)) throw ValidationError("sweep_thermo: beta and rho must be positive");
  const double window = opt.cutoff / beta;
  auto one = [&](double eta) {
    const MetricGraph gs = scale_graph(g, eta);
    const double size = total_length(gs);
    const double k1 = std::sqrt(window);
    SpectrumResult sp = full_spectrum(gs, bc, k1);
    std::vector<double> levels = sp.expanded();
    if (levels.empty()) throw SolverError("sweep_thermo: no eigenvalue below the cutoff");
    std::sort(levels.begin(), levels.end());
    double top = window;
    if (levels.front() > 0) {
      // mu < lambda_0, so lambda_0 + window covers mu + window
      top = levels.front() + window;
      ScanOptions so;
      so.k_min = k1;
      const SpectrumResult more = scan_spectrum(gs, bc, std::sqrt(top), so);
      for (double l : more.expanded()) levels.push_back(l);
    }
    TailBound tail = [top, beta](double mu) { return weyl_tail_1d(top, mu, beta); };
    ThermoState st = solve_mu(std::move(levels), beta, rho, size, tail);
    for (const auto& w : sp.warnings) st.warnings.push_back(w);
    return std::make_pair(size, st);
  };
  SweepResult r;
  for (auto& [size, st] : map_sizes(etas, one)) {
    r.sizes.push_back(size);
    r.rho0.push_back(st.ground_occupation());
    r.states.push_back(std::move(st));
  }
  classify(r, rho, opt.rule);
  return r;
}

GroundStateLimit ground_state_limit(const MetricGraph& g, const BoundaryConditions& bc,
                                    const std::vector<double>& etas) {
  if (etas.size() < 2) throw ValidationError("ground_state_limit: at least 2 sizes are needed");
  for (size_t i = 1; i < etas.size(); ++i)
    if (!(etas[i] > etas[i - 1])) throw ValidationError("ground_state_limit: sizes must increase strictly");
  ScatteringData sd(bc);
  if (sd.lam.empty() || !(sd.lam.back() > 0))
    throw ValidationError("ground_state_limit: L has no positive eigenvalue");
  GroundStateLimit r;
  r.l_max = sd.lam.back();
  for (double eta : etas) {
    const MetricGraph gs = scale_graph(g, eta);
    const auto neg = negative_spectrum(gs, bc, kappa_bound(gs, bc));
    if (neg.empty()) {
      std::ostringstream os;
      os << "ground_state_limit: no negative eigenvalue at eta = " << eta;
      throw SolverError(os.str());
    }
    r.sizes.push_back(total_length(gs));
    r.k0sq.push_back(neg.front().lambda);
  }
  r.limit = r.k0sq.back();
  r.dist_minus_lmax = std::abs(r.limit + r.l_max);
  r.dist_minus_lmax_sq = std::abs(r.limit + r.l_max * r.l_max);
  const double tol = 1e-12 * std::max(1.0, std::abs(r.limit));
  bool up = true, down = true;
  for (size_t i = 1; i < r.k0sq.size(); ++i) {
    const double dlt = r.k0sq[i] - r.k0sq[i - 1];
    if (dlt < -tol) up = false;
    if (dlt > tol) down = false;
  }
  r.monotone = up || down;
  r.cauchy = true;
  for (size_t i = 2; i < r.k0sq.size(); ++i) {
    const double g1 = std::abs(r.k0sq[i - 1] - r.k0sq[i - 2]), g2 = std::abs(r.k0sq[i] - r.k0sq[i - 1]);
    if (g2 > 0.5 * g1 + tol) r.cauchy = false;
  }
  return r;
}

double fermi_free_energy(double beta, double mu) {
  if (!(beta > 0) || !std::isfinite(mu)) throw ValidationError("fermi_free_energy: beta must be positive");
  auto f = [&](double k) { return softplus(-beta * (k * k - mu)); };
  double total = 0.0, err = 0.0;
  double a = 0.0;
  if (mu > 0) {
    // Fermi edge at sqrt(mu): finite part by adaptive Gauss-Kronrod
    a = std::sqrt(mu);
    double e1 = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, a, 15, 1e-15, &e1);
    err += e1;
  }
  boost::math::quadrature::exp_sinh<double> es;
  double e2 = 0.0, l1 = 0.0;
  total += es.integrate(f, a, std::numeric_limits<double>::infinity(), 1e-15, &e2, &l1);
  err += e2 * std::max(1.0, l1);
  const double value = -total / beta;
  if (!std::isfinite(value) || err / beta > std::max(1e-10, 1e-12 * std::abs(value)) * 1e2)
    throw SolverError("fermi_free_energy: quadrature failed");
  return value;
}

SmoothnessProbe free_energy_smoothness(double mu, double beta_lo, double beta_hi, int points) {
  if (!(beta_lo > 0) || !(beta_hi > beta_lo) || points < 5)
    throw ValidationError("free_energy_smoothness: need 0 < beta_lo < beta_hi and >= 5 points");
  SmoothnessProbe p;
  const double step = 1e-3;
  for (int i = 0; i < points; ++i) {
    const double b = beta_lo + (beta_hi - beta_lo) * i / (points - 1);
    const double d2 = (fermi_free_energy(b + step * b, mu) - 2 * fermi_free_energy(b, mu) +
                       fermi_free_energy(b - step * b, mu)) /
                      (step * b * step * b);
    p.betas.push_back(b);
    p.second_derivative.push_back(d2);
    if (!std::isfinite(d2)) p.singular = true;
    p.max_abs = std::max(p.max_abs, std::abs(d2));
  }
  for (int i = 1; i < points; ++i)
    if (std::abs(p.second_derivative[i] - p.second_derivative[i - 1]) > 0.25 * p.max_abs + 1e-12) p.singular = true;
  return p;
}

namespace {

struct PairLevels {
  double L = 0.0;
  std::vector<double> levels;
  double top = 0.0;
};

PairLevels pair_levels(double d, double L, const Profile& sigma, double h, double window) {
  DomainSpec spec = DomainSpec::pencil(d, L);
  spec.sigma = sigma;
  const double e0 = pencil_lowest(spec, h, 1).front();
  PairLevels p;
  p.L = L;
  p.top = e0 + window;
  p.levels = pencil_spectrum(d, L, sigma, Sector::Fermionic, h, p.top);
  if (p.levels.empty()) throw SolverError("pair spectrum window is empty");
  return p;
}

// 2D Weyl bound per unit length for the fermionic pencil, area ~ L d
TailBound pair_tail(double d, double top, double beta) {
  return [=](double mu) { return -d / (4 * kPi * beta) * std::log(-std::expm1(-beta * (top - mu))); };
}

}  // namespace

PairSweep pair_condensation(double d, double beta, double rho, const std::vector<double>& L_list,
                            const Profile& sigma, const PairOptions& opt) {
  require_sizes(L_list, "pair_condensation");
  if (!(d > 0) || !(beta > 0) || !(rho > 0)) throw ValidationError("pair_condensation: d, beta, rho must be positive");
  const double window = opt.cutoff / beta;
  const auto spectra = map_sizes(L_list, [&](double L) { return pair_levels(d, L, sigma, opt.h * d, window); });
  PairSweep ps;
  for (const auto& p : spectra) {
    ThermoState st = solve_mu(p.levels, beta, rho, p.L, pair_tail(d, p.top, beta));
    ps.e0.push_back(st.levels.front());
    ps.sweep.sizes.push_back(p.L);
    ps.sweep.rho0.push_back(st.ground_occupation());
    ps.sweep.states.push_back(std::move(st));
  }
  classify(ps.sweep, rho, opt.rule);

  // supremum of the excited-state density, reached as mu -> E0
  const PairLevels& big = spectra.back();
  const double e0 = big.levels.front();
  long double sat = 0;
  for (size_t i = 1; i < big.levels.size(); ++i) sat += bose_density(big.levels[i], e0, beta, big.L);
  ps.rho_crit = static_cast<double>(sat) + pair_tail(d, big.top, beta)(e0);
  return ps;
}

std::vector<double> discrete_path_laplacian(int n, const std::vector<double>& weights) {
  if (n < 1) throw ValidationError("discrete_path_laplacian: n must be at least 1");
  for (double w : weights)
    if (!(w > 0) || !std::isfinite(w)) throw ValidationError("discrete_path_laplacian: weights must be positive");
  if (n == 1) return {0.0};
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n), sub(n - 1);
  for (int k = 0; k < n - 1; ++k) {
    const double w = weights.empty() ? 1.0 : weights[k % weights.size()];
    sub(k) = -w;
    diag(k) += w;
    diag(k + 1) += w;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + n);
  v.front() = 0.0;  // constants are an exact null vector
  return v;
}

void SurfaceModelSpec::validate() const {
  if (!(delta > 0)) throw ValidationError("surface model: delta must be positive");
  if (!(e > 0)) throw ValidationError("surface model: weight e must be positive");
  for (double w : weights)
    if (!(w > 0)) throw ValidationError("surface model: weights must be positive");
  if (!(alpha_s >= 0)) throw ValidationError("surface model: alpha_s must be non-negative");
  if (!(lambda_rep >= 0)) throw ValidationError("surface model: lambda_rep must be non-negative");
  if (!(d > 0) || !(h > 0)) throw ValidationError("surface model: d and h must be positive");
}

int SurfaceModelSpec::defects(double L) const { return static_cast<int>(std::floor(L / delta + 1e-12)); }

SurfaceResult surface_model(const SurfaceModelSpec& spec, double beta, double rho, const std::vector<double>& L_list,
                            const VerdictRule& rule) {
  spec.validate();
  require_sizes(L_list, "surface_model");
  if (!(beta > 0) || !(rho > 0)) throw ValidationError("surface_model: beta and rho must be positive");
  const double window = 40.0 / beta;

  auto one = [&](double L) {
    const int n = spec.defects(L);
    if (n < 1) throw ValidationError("surface_model: no defect fits into L");
    const PairLevels bulk = pair_levels(spec.d, L, {}, spec.h * spec.d, window);
    std::vector<double> w = spec.weights;
    if (w.empty()) w.assign(1, spec.e);
    const std::vector<double> surf = discrete_path_laplacian(n, w);
    const TailBound tail = pair_tail(spec.d, bulk.top, beta);

    // surface filling per defect after solving for mu at a given rho_s
    struct Eval {
      double next;
      ThermoState st;
    };
    auto F = [&](double rs) {
      const double shift = spec.lambda_rep * rs - spec.alpha_s;
      std::vector<double> lv = bulk.levels;
      for (double l : surf) lv.push_back(l + shift);
      ThermoState st = solve_mu(lv, beta, rho, L, tail);
      long double s = 0;
      for (double l : surf) s += 1.0L / std::expm1(beta * (l + shift - st.mu));
      return Eval{static_cast<double>(s / n), std::move(st)};
    };

    SurfacePoint pt;
    pt.L = L;
    pt.defects = n;
    const double cap = rho * L / n;  // every pair on the surface
    double x = 0.0;
    bool done = false;
    int total_it = 0;
    for (double damp : {0.5, 0.25}) {
      x = 0.0;
      double prev_res = std::numeric_limits<double>::infinity();
      int growth = 0;
      for (int it = 0; it < 500; ++it) {
        const double fx = F(x).next;
        const double res = fx - x;
        ++total_it;
        if (std::abs(res) <= 1e-10 * std::max(1.0, x)) {
          done = true;
          break;
        }
        // oscillation: residual magnitude not shrinking
        growth = std::abs(res) >= prev_res ? growth + 1 : 0;
        if (growth >= 5) break;
        prev_res = std::abs(res);
        x = std::clamp(x + damp * res, 0.0, cap);
      }
      pt.damping = damp;
      if (done) break;
    }
    if (!done) {
      // x - F(x) increases in x and changes sign on [0, cap]
      auto G = [&](double y) { return y - F(y).next; };
      const double g0 = G(0.0), g1 = G(cap);
      if (g0 >= 0) {
        x = 0.0;
      } else if (g1 <= 0) {
        x = cap;
      } else {
        std::uintmax_t it = 300;
        auto br = boost::math::tools::toms748_solve(G, 0.0, cap, g0, g1, boost::math::tools::eps_tolerance<double>(52), it);
        x = std::abs(G(br.first)) <= std::abs(G(br.second)) ? br.first : br.second;
        total_it += static_cast<int>(it);
      }
      pt.damping = 0.0;
    }
    Eval ev = F(x);
    pt.iterations = total_it;
    pt.rho_s = x;
    pt.residual = std::abs(ev.next - x) / std::max(1.0, x);
    pt.mu = ev.st.mu;
    pt.density_residual = ev.st.residual;
    pt.rho0 = bose_density(bulk.levels.front(), ev.st.mu, beta, L);
    if (pt.residual > 1e-10) {
      std::ostringstream os;
      os << "surface_model: fixed point not reached at L = " << L << " (residual " << pt.residual
         << ", damping 0.5 and 0.25 oscillated)";
      throw SolverError(os.str());
    }
    return std::make_tuple(pt, ev.st, bulk.levels.front());
  };

  SurfaceResult r;
  double e0_last = 0.0;
  for (auto& [pt, st, e0] : map_sizes(L_list, one)) {
    r.bulk.sizes.push_back(pt.L);
    r.bulk.rho0.push_back(pt.rho0);
    r.bulk.states.push_back(std::move(st));
    r.points.push_back(pt);
    e0_last = e0;
  }
  classify(r.bulk, rho, rule);
  r.destruction_lhs = 2 * spec.lambda_rep * spec.delta * rho;
  r.destruction_rhs = e0_last + spec.alpha_s;
  r.destruction_condition = r.destruction_lhs < r.destruction_rhs;
  return r;
}

}  // namespace qg
