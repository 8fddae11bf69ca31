#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qgraph/one_particle.hpp"
#include "qgraph/oracle.hpp"

namespace qg {

// Grand-canonical ideal Bose gas on a finite spectrum.
struct ThermoState {
  double beta = 0.0;
  double rho = 0.0;
  double size = 0.0;
  double mu = 0.0;
  std::vector<double> levels;       // ascending, repeated by multiplicity
  std::vector<double> occupations;  // density per eigenstate, same order
  double residual = 0.0;            // |sum occupations - rho| / rho
  double tail_estimate = 0.0;       // density above the supplied spectrum (Weyl bound), if known
  std::vector<std::string> warnings;

  double ground_occupation() const { return occupations.empty() ? 0.0 : occupations.front(); }
};

// Density carried by levels above the top of a truncated spectrum, as a function of mu.
using TailBound = std::function<double(double mu)>;

// mu < levels[0] with (1/size) sum 1/(exp(beta(l - mu)) - 1) = rho.
ThermoState solve_mu(std::vector<double> levels, double beta, double rho, double size,
                     const TailBound& tail = {});

// Bose occupation density (1/size) / (exp(beta (l - mu)) - 1).
double bose_density(double l, double mu, double beta, double size);

enum class Verdict { Condensation, NoCondensation, Inconclusive };
std::string to_string(Verdict v);

struct VerdictRule {
  double condensed_fraction = 1e-3;  // min rho0 over the 3 largest sizes above this * rho
  double empty_fraction = 1e-6;      // rho0 below this * rho at the largest size, decreasing
  double decay_slope = -0.9;         // or log-log slope of rho0 over the 3 largest at most this
};

struct SweepResult {
  std::vector<double> sizes;
  std::vector<ThermoState> states;
  std::vector<double> rho0;
  double limsup_estimate = 0.0;  // min rho0 over the 3 largest sizes
  double decay_slope = 0.0;      // d log rho0 / d log size over the 3 largest sizes
  bool decreasing = false;       // rho0 strictly decreasing over the 3 largest sizes
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::string> diagnostics;
};

// Applies the rule to filled sizes/rho0 (needs >= 3 sizes).
void classify(SweepResult& r, double rho, const VerdictRule& rule = {});

struct SweepOptions {
  double cutoff = 40.0;  // levels up to mu + cutoff / beta
  VerdictRule rule;
};

// Thermodynamic limit over eta-scaled copies of g (vertex conditions kept).
SweepResult sweep_thermo(const MetricGraph& g, const BoundaryConditions& bc, double beta, double rho,
                         const std::vector<double>& etas, const SweepOptions& opt = {});

// 1D Weyl bound on the density above lambda_top: int_{top}^inf dl / (2 pi sqrt l) / (e^{beta(l-mu)} - 1).
double weyl_tail_1d(double lambda_top, double mu, double beta);

struct GroundStateLimit {
  std::vector<double> sizes;     // total lengths
  std::vector<double> k0sq;      // lowest eigenvalue per size
  double limit = 0.0;            // estimate (last value)
  double l_max = 0.0;            // largest eigenvalue of L
  double dist_minus_lmax = 0.0;      // |limit + L_max|
  double dist_minus_lmax_sq = 0.0;   // |limit + L_max^2|
  bool monotone = false;
  bool cauchy = false;           // successive gaps shrink by >= 2x
};

GroundStateLimit ground_state_limit(const MetricGraph& g, const BoundaryConditions& bc,
                                    const std::vector<double>& etas);

// -(1/beta) int_0^inf log(1 + exp(-beta (k^2 - mu))) dk.
double fermi_free_energy(double beta, double mu);

struct SmoothnessProbe {
  std::vector<double> betas;
  std::vector<double> second_derivative;
  double max_abs = 0.0;
  bool singular = false;  // non-finite value or a jump in the second difference
};

// Central second differences of fermi_free_energy in beta on a uniform grid.
SmoothnessProbe free_energy_smoothness(double mu, double beta_lo, double beta_hi, int points = 61);

struct PairOptions {
  double h = 0.25;        // grid step in units of d
  double cutoff = 40.0;
  VerdictRule rule;
};

struct PairSweep {
  SweepResult sweep;
  std::vector<double> e0;              // pair ground state per size
  double rho_crit = 0.0;  // excited-state density as mu -> E0 at the largest size
};

// Pair spectra from pencil_spectrum (fermionic sector) over L_list.
PairSweep pair_condensation(double d, double beta, double rho, const std::vector<double>& L_list,
                            const Profile& sigma, const PairOptions& opt = {});

// Eigenvalues of the weighted path Laplacian on n sites, gamma_{k,k+1} = e_k
// (weights.size() == n - 1, or empty for uniform 1).
std::vector<double> discrete_path_laplacian(int n, const std::vector<double>& weights = {});

struct SurfaceModelSpec {
  double delta = 1.0;       // inverse defect density
  double e = 1.0;           // uniform weight, used when weights is empty
  std::vector<double> weights;  // per bond, cycled if shorter than n(L) - 1
  double alpha_s = 0.0;     // surface tension
  double lambda_rep = 0.0;  // repulsion
  double d = 1.0;           // pair size
  double h = 0.25;          // oracle step in units of d

  void validate() const;
  int defects(double L) const;  // floor(L / delta)
};

struct SurfacePoint {
  double L = 0.0;
  int defects = 0;
  double mu = 0.0;
  double rho_s = 0.0;     // pairs per defect
  double rho0 = 0.0;      // bulk ground-state density
  double residual = 0.0;  // |F(rho_s) - rho_s| / max(1, rho_s)
  double density_residual = 0.0;
  int iterations = 0;
  double damping = 0.5;
};

struct SurfaceResult {
  SweepResult bulk;
  std::vector<SurfacePoint> points;
  double destruction_lhs = 0.0;  // 2 lambda delta rho
  double destruction_rhs = 0.0;  // E0 + alpha at the largest size
  bool destruction_condition = false;
};

SurfaceResult surface_model(const SurfaceModelSpec& spec, double beta, double rho,
                            const std::vector<double>& L_list, const VerdictRule& rule = {});

}  // namespace qg
