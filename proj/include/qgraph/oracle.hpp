#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qgraph/sparse_eigen.hpp"

namespace qg {

enum class Shape { Square, PeriodicSquare, Pencil };
enum class Sector { Full, Bosonic, Fermionic, HardcoreBosonic };
enum class OuterBoundary { Dirichlet, Robin };

std::string to_string(Shape s);
std::string to_string(Sector s);
Sector parse_sector(const std::string& s);

using Profile = std::function<double(double)>;

// Two particles on [0, length]^2 (or the torus), operator -Laplacian.
// Pencil: {|x - y| <= d} inside [0, L]^2, Robin (sigma) at x = 0 and y = 0,
// Dirichlet at x = L, y = L and on the wall |x - y| = d.
struct DomainSpec {
  Shape shape = Shape::Square;
  double length = 1.0;
  double d = 1.0;           // pencil width, or wall distance when hard_wall is set on a square
  bool hard_wall = false;   // always on for Pencil
  Sector sector = Sector::Full;
  OuterBoundary outer = OuterBoundary::Dirichlet;  // square sides; pencil uses Robin at x,y = 0
  Profile sigma;  // boundary potential along a side (arclength from its start); empty means 0
  Profile alpha;  // contact strength at (y, y); empty means 0

  static DomainSpec square(double l, Sector sector = Sector::Full);
  static DomainSpec periodic(double L, Sector sector = Sector::Full);
  static DomainSpec pencil(double d, double L, Sector sector = Sector::Fermionic);

  void validate() const;
};

struct OracleMatrix {
  SpMat A;                                  // stiffness + boundary + contact terms
  Eigen::VectorXd mass;                     // lumped
  std::vector<std::pair<int, int>> nodes;   // grid indices (i, j) with i <= j for sectors
  double h = 0.0;
  int n = 0;                                // cells per side
};

// Quadratic form -> matrix on a grid of step h (must divide the lengths).
OracleMatrix build_operator(const DomainSpec& spec, double h);

// m lowest eigenvalues at one grid level.
std::vector<double> oracle_eigenvalues(const DomainSpec& spec, double h, int m);

// Number of eigenvalues below lambda at grid step h.
int oracle_count_below(const DomainSpec& spec, double h, double lambda);

struct OracleResult {
  std::vector<double> h;
  std::vector<std::vector<double>> levels;  // levels[g][i]
  std::vector<double> values;                // Richardson, last two levels
  std::vector<double> errors;                // |l_{h/2} - l_{h/4}| / 3
  std::vector<double> orders;                // observed order from the last three levels
  std::vector<bool> flagged;                 // |order - 2| > 0.5
  std::optional<double> essential_bottom;
};

OracleResult extrapolate(const DomainSpec& spec, int m, const std::vector<double>& h_list);

// Eigenvalues E_n(L) <= upper of the pencil at step h (banded solver).
std::vector<double> pencil_spectrum(double d, double L, const Profile& sigma, Sector sector, double h,
                                    double upper);
// Lowest m eigenvalues of the pencil.
std::vector<double> pencil_lowest(const DomainSpec& spec, double h, int m);

// Bottom of the essential spectrum of the untruncated pencil for the sector.
std::optional<double> essential_bottom(const DomainSpec& spec);

// hbar^2 / (2 m_e) in eV nm^2.
inline constexpr double kHbar2Over2MeEvNm2 = 0.0380998212;
inline double physical_energy_ev(double e, double length_unit_nm) {
  return e * kHbar2Over2MeEvNm2 / (length_unit_nm * length_unit_nm);
}

// "row col value" lines, 0-based, upper triangle included.
void export_coordinate(const OracleMatrix& m, std::ostream& os);

}  // namespace qg
