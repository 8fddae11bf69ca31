#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "csv.hpp"
#include "graph_file.hpp"
#include "qgraph/bethe.hpp"
#include "qgraph/errors.hpp"
#include "qgraph/one_particle.hpp"
#include "qgraph/oracle.hpp"
#include "qgraph/thermo.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qg;
using io::Csv;
using io::fmt;

namespace {

constexpr double kPi = 3.14159265358979323846;

// "2.5", "pi", "pi/50", "3*pi", "1/32"
double parse_value(std::string s) {
  s.erase(std::remove_if(s.begin(), s.end(), ::isspace), s.end());
  if (s.empty()) throw ValidationError("empty number");
  auto atom = [](const std::string& a) {
    if (a == "pi") return kPi;
    size_t pos = 0;
    double v = 0;
    try {
      v = std::stod(a, &pos);
    } catch (const std::exception&) {
      throw ValidationError("not a number: '" + a + "'");
    }
    if (pos != a.size()) throw ValidationError("not a number: '" + a + "'");
    return v;
  };
  if (auto p = s.find('/'); p != std::string::npos) return parse_value(s.substr(0, p)) / atom(s.substr(p + 1));
  if (auto p = s.find('*'); p != std::string::npos) return atom(s.substr(0, p)) * parse_value(s.substr(p + 1));
  return atom(s);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_value(item));
  if (out.empty()) throw ValidationError("empty list");
  return out;
}

// relative output paths go below QGRAPH_OUTPUT_DIR when it is set
fs::path resolve(const std::string& p) {
  fs::path path(p);
  if (const char* dir = std::getenv("QGRAPH_OUTPUT_DIR"); dir && *dir && path.is_relative()) path = fs::path(dir) / path;
  return path;
}

void write_text(const std::string& target, const std::string& text, std::ostream& fallback) {
  if (target.empty() || target == "-") {
    std::ostream& os = target == "-" ? std::cout : fallback;
    os << text;
    os.flush();
    return;
  }
  const fs::path p = resolve(target);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + p.string() + "'");
  f << text;
}

void echo_options(const CLI::App* sub, Csv& csv) {
  for (const CLI::Option* o : sub->get_options()) {
    if (o->get_lnames().empty() || o->get_lnames().front() == "help") continue;
    std::string v;
    if (o->count() > 0) {
      for (const auto& r : o->results()) v += (v.empty() ? "" : ";") + r;
      if (o->get_expected_min() == 0 && v.empty()) v = "true";
    } else {
      v = o->get_default_str();
    }
    csv.meta(o->get_lnames().front(), v.empty() ? "-" : v);
  }
}

void emit(Csv& csv, const CLI::App* sub, const std::string& command, const std::string& out) {
  csv.meta("command", command);
  echo_options(sub, csv);
  std::ostringstream os;
  csv.write(os);
  write_text(out, os.str(), std::cout);
}

void emit_summary(const json& j, const std::string& summary, const std::string& out) {
  std::string target = summary;
  if (target.empty() && !out.empty() && out != "-") target = fs::path(out).replace_extension(".json").string();
  write_text(target, j.dump(2) + "\n", target.empty() ? std::cerr : std::cout);
}

json rule_json(const VerdictRule& r) {
  return {{"condensed_fraction", r.condensed_fraction}, {"empty_fraction", r.empty_fraction}, {"decay_slope", r.decay_slope}};
}

json sweep_json(const SweepResult& r, double rho) {
  json j;
  j["verdict"] = to_string(r.verdict);
  j["limsup_estimate"] = r.limsup_estimate;
  j["limsup_fraction"] = r.limsup_estimate / rho;
  j["decay_slope"] = r.decay_slope;
  j["decreasing"] = r.decreasing;
  j["sizes"] = r.sizes;
  j["rho0"] = r.rho0;
  j["diagnostics"] = r.diagnostics;
  std::vector<std::string> w;
  for (const auto& s : r.states)
    for (const auto& x : s.warnings) w.push_back(x);
  j["warnings"] = w;
  return j;
}

Profile constant(double c) {
  return [c](double) { return c; };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectra of quantum graphs, two-particle contact models and condensation sweeps"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(io::kVersion));

  std::string out, summary, graph;
  double kmax = 0, grid = 0, tol = 1e-10, kappa_max = 0;

  auto* spectrum = app.add_subcommand("spectrum", "one-particle eigenvalues from the secular determinant");
  spectrum->add_option("--graph", graph, "graph JSON file")->required();
  spectrum->add_option("--kmax", kmax, "upper bound on k")->required()->check(CLI::PositiveNumber);
  spectrum->add_option("--grid", grid, "scan step in k (0: pi / (8 total length))")->capture_default_str();
  spectrum->add_option("--tol", tol, "acceptance |f| at a root")->capture_default_str();
  spectrum->add_option("--out", out, "CSV output (default stdout)");

  auto* negative = app.add_subcommand("negative", "negative eigenvalues -kappa^2");
  negative->add_option("--graph", graph, "graph JSON file")->required();
  negative->add_option("--kappa-max", kappa_max, "upper bound on kappa (0: automatic)")->capture_default_str();
  negative->add_option("--out", out, "CSV output (default stdout)");

  int weyl_count = 200;
  double weyl_square = 0, weyl_lambda = 2500, weyl_h = 0;
  auto* weyl = app.add_subcommand("weyl", "Weyl-law fit (graph) or two-particle count on a square");
  weyl->add_option("--graph", graph, "graph JSON file");
  weyl->add_option("--kmax", kmax, "scan bound (0: enough for --count levels)")->capture_default_str();
  weyl->add_option("--count", weyl_count, "eigenvalues used in the fit")->capture_default_str();
  weyl->add_option("--square", weyl_square, "side of the two-particle square instead of a graph");
  weyl->add_option("--lambda", weyl_lambda, "count threshold on the square")->capture_default_str();
  weyl->add_option("--step", weyl_h, "grid step on the square (0: side / 500)")->capture_default_str();
  weyl->add_option("--out", out, "CSV output (default stdout)");

  double length = kPi, alpha = 0, lmax = 0;
  auto* bethe = app.add_subcommand("bethe", "two-particle Bethe equations");
  bethe->require_subcommand(1);
  auto* gaudin = bethe->add_subcommand("gaudin", "two bosons on an interval with Dirichlet ends");
  auto* ring = bethe->add_subcommand("ring", "two bosons on a ring");
  for (auto* s : {gaudin, ring}) {
    s->add_option("--length", length, "interval length or ring circumference")->capture_default_str();
    s->add_option("--alpha", alpha, "contact strength")->capture_default_str();
    s->add_option("--lmax", lmax, "eigenvalue bound")->required();
    s->add_option("--out", out, "CSV output (default stdout)");
  }
  auto* bgraph = bethe->add_subcommand("graph", "common zeros of Z(k1,k2) on a graph");
  bgraph->add_option("--graph", graph, "graph JSON file (pair_interactions.alpha)")->required();
  bgraph->add_option("--lmax", lmax, "eigenvalue bound")->required();
  bgraph->add_option("--grid", grid, "seed grid step (0: automatic)")->capture_default_str();
  bgraph->add_option("--out", out, "CSV output (default stdout)");

  std::string h_levels, sector = "full", outer = "dirichlet", export_path;
  double d = 1.0, L = kPi, sigma = 0, wall = 0, physical = 0;
  int count = 6;
  bool periodic = false;
  auto* oracle = app.add_subcommand("oracle", "finite-element two-particle oracle with Richardson extrapolation");
  oracle->require_subcommand(1);
  auto* osq = oracle->add_subcommand("square", "two particles on [0, L]^2");
  osq->add_flag("--periodic", periodic, "periodic square (ring) instead of Dirichlet/Robin sides");
  osq->add_option("--outer", outer, "dirichlet or robin sides")->capture_default_str();
  osq->add_option("--hard-wall", wall, "Dirichlet wall at |x - y| = value (0: none)")->capture_default_str();
  osq->add_option("--L", L, "side length")->capture_default_str();
  osq->add_option("--sector", sector, "full, bosonic, fermionic or hardcore")->capture_default_str();
  osq->add_option("--count", count, "number of eigenvalues")->capture_default_str();
  std::string psector = "fermionic";
  int pcount = 2;
  double pL = 12.0;
  auto* open = oracle->add_subcommand("pencil", "bound pair in {|x - y| <= d} on the half-line");
  open->add_option("--d", d, "pair size")->capture_default_str();
  open->add_option("--L", pL, "truncation length")->capture_default_str();
  open->add_option("--sector", psector, "full, bosonic, fermionic or hardcore")->capture_default_str();
  open->add_option("--count", pcount, "number of eigenvalues")->capture_default_str();
  open->add_option("--physical", physical, "d in meters: adds energies in eV");
  for (auto* s : {osq, open}) {
    s->add_option("--h-levels", h_levels, "comma-separated halving grid steps, e.g. pi/50,pi/100,pi/200")->required();
    s->add_option("--sigma", sigma, "boundary potential (constant)")->capture_default_str();
    s->add_option("--alpha", alpha, "contact strength of the full delta term")->capture_default_str();
    s->add_option("--export", export_path, "coordinate dump of the finest matrix");
    s->add_option("--out", out, "CSV output (default stdout)");
  }

  double beta = 1.0, rho = 1.0, h = 0.25, delta = 1.0, lambda_rep = 0, alpha_s = 0, e_weight = 1.0;
  std::string etas = "25,50,100,200,400", sizes = "6,12,24,48,96,192,384";
  auto* bec = app.add_subcommand("bec", "grand-canonical condensation sweeps");
  bec->require_subcommand(1);
  auto* bsweep = bec->add_subcommand("sweep", "one-particle graph, eta-scaled");
  bsweep->add_option("--graph", graph, "graph JSON file")->required();
  bsweep->add_option("--eta", etas, "comma-separated increasing scale factors")->capture_default_str();
  auto* bpairs = bec->add_subcommand("pairs", "bound pairs on the pencil domain");
  bpairs->add_option("--d", d, "pair size")->capture_default_str();
  bpairs->add_option("--sigma", sigma, "boundary potential (constant)")->capture_default_str();
  auto* bsurf = bec->add_subcommand("surface", "pairs with surface defects");
  bsurf->add_option("--d", d, "pair size")->capture_default_str();
  bsurf->add_option("--delta", delta, "inverse defect density")->capture_default_str();
  bsurf->add_option("--lambda-rep", lambda_rep, "surface repulsion")->capture_default_str();
  bsurf->add_option("--alpha-s", alpha_s, "surface tension")->capture_default_str();
  bsurf->add_option("--e", e_weight, "path-graph bond weight")->capture_default_str();
  for (auto* s : {bpairs, bsurf}) {
    s->add_option("--sizes", sizes, "comma-separated truncation lengths in units of d")->capture_default_str();
    s->add_option("--step", h, "grid step in units of d")->capture_default_str();
  }
  for (auto* s : {bsweep, bpairs, bsurf}) {
    s->add_option("--beta", beta, "inverse temperature")->capture_default_str();
    s->add_option("--rho", rho, "density")->capture_default_str();
    s->add_option("--out", out, "CSV output (default stdout)");
    s->add_option("--summary", summary, "JSON summary (default: --out with .json, else stderr)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*spectrum) {
      const auto gf = io::load_graph(graph);
      ScanOptions so;
      so.grid = grid;
      so.tol = tol;
      const auto r = full_spectrum(gf.graph, gf.bc, kmax, so);
      Csv csv({"index", "lambda", "k", "multiplicity", "residual", "source"});
      int i = 0;
      for (const auto& ev : r.eigenvalues)
        csv.row({std::to_string(i++), fmt(ev.lambda), fmt(ev.k), std::to_string(ev.multiplicity), fmt(ev.residual),
                 to_string(ev.source)});
      std::string w;
      for (const auto& s : r.warnings) w += (w.empty() ? "" : ";") + s;
      csv.meta("warnings", w.empty() ? "none" : w);
      emit(csv, spectrum, "spectrum", out);
    } else if (*negative) {
      const auto gf = io::load_graph(graph);
      const double km = kappa_max > 0 ? kappa_max : kappa_bound(gf.graph, gf.bc);
      Csv csv({"index", "lambda", "kappa", "multiplicity", "residual"});
      if (km > 0) {
        int i = 0;
        for (const auto& ev : negative_spectrum(gf.graph, gf.bc, km))
          csv.row({std::to_string(i++), fmt(ev.lambda), fmt(ev.k), std::to_string(ev.multiplicity), fmt(ev.residual)});
      }
      csv.meta("kappa_bound", fmt(km));
      emit(csv, negative, "negative", out);
    } else if (*weyl) {
      if (weyl_square > 0) {
        const double hh = weyl_h > 0 ? weyl_h : weyl_square / 500;
        auto spec = DomainSpec::square(weyl_square);
        const int n = oracle_count_below(spec, hh, weyl_lambda);
        const double expected = weyl_square * weyl_square / (4 * kPi);
        Csv csv({"lambda", "count", "count_over_lambda", "expected", "rel_error"});
        csv.row({fmt(weyl_lambda), std::to_string(n), fmt(n / weyl_lambda), fmt(expected),
                 fmt(std::abs(n / weyl_lambda - expected) / expected)});
        emit(csv, weyl, "weyl", out);
      } else {
        if (graph.empty()) throw ValidationError("weyl needs --graph or --square");
        const auto gf = io::load_graph(graph);
        const double total = total_length(gf.graph);
        const double km = kmax > 0 ? kmax : (weyl_count + 10) * kPi / total;
        const auto r = full_spectrum(gf.graph, gf.bc, km);
        const auto w = weyl_fit(r, gf.graph, weyl_count);
        Csv csv({"slope", "expected", "rel_error", "n_used"});
        csv.row({fmt(w.slope), fmt(w.expected), fmt(w.rel_error), std::to_string(w.n_used)});
        emit(csv, weyl, "weyl", out);
      }
    } else if (*gaudin || *ring) {
      const bool g = gaudin->parsed();
      const auto roots = g ? solve_gaudin(length, alpha, lmax) : solve_lieb_liniger_ring(length, alpha, lmax);
      Csv csv({"index", "k1", "k2", "lambda", "residual", "n", "m"});
      int i = 0;
      for (const auto& r : roots)
        csv.row({std::to_string(i++), fmt(r.k1), fmt(r.k2), fmt(r.lambda), fmt(r.residual), std::to_string(r.n),
                 std::to_string(r.m)});
      emit(csv, g ? gaudin : ring, g ? "bethe gaudin" : "bethe ring", out);
    } else if (*bgraph) {
      const auto gf = io::load_graph(graph);
      const auto spec = make_graph_z_spec(gf.graph, gf.bc, gf.pair_alpha);
      PairSearchOptions po;
      po.grid = grid;
      Csv csv({"index", "k1", "k2", "lambda", "residual", "multiplicity"});
      int i = 0;
      for (const auto& r : solve_graph_pair(spec, lmax, po))
        csv.row({std::to_string(i++), fmt(r.k1), fmt(r.k2), fmt(r.lambda), fmt(r.residual),
                 std::to_string(r.multiplicity)});
      csv.meta("layout", spec.layout == GraphZSpec::Layout::Interval ? "interval" : "factorised");
      emit(csv, bgraph, "bethe graph", out);
    } else if (*osq || *open) {
      const bool pen = open->parsed();
      if (pen) {
        sector = psector;
        count = pcount;
        L = pL;
      }
      DomainSpec spec = pen ? DomainSpec::pencil(d, L, parse_sector(sector))
                            : (periodic ? DomainSpec::periodic(L, parse_sector(sector))
                                        : DomainSpec::square(L, parse_sector(sector)));
      if (!pen && !periodic) {
        if (outer == "robin") spec.outer = OuterBoundary::Robin;
        else if (outer != "dirichlet") throw ValidationError("--outer must be dirichlet or robin");
        if (wall > 0) {
          spec.hard_wall = true;
          spec.d = wall;
        }
      }
      if (sigma != 0) spec.sigma = constant(sigma);
      if (alpha != 0) spec.alpha = constant(alpha);
      const auto hs = parse_list(h_levels);
      const auto r = extrapolate(spec, count, hs);
      std::vector<std::string> head = {"index", "value", "error", "order", "flagged"};
      for (size_t g = 0; g < hs.size(); ++g) head.push_back("level_" + std::to_string(g));
      const bool phys = pen && physical > 0;
      const double unit_nm = phys ? physical * 1e9 / d : 0.0;
      if (phys) head.push_back("energy_ev");
      Csv csv(head);
      for (int i = 0; i < count; ++i) {
        std::vector<std::string> row = {std::to_string(i), fmt(r.values[i]), fmt(r.errors[i]), fmt(r.orders[i]),
                                        r.flagged[i] ? "1" : "0"};
        for (size_t g = 0; g < hs.size(); ++g) row.push_back(fmt(r.levels[g][i]));
        if (phys) row.push_back(fmt(physical_energy_ev(r.values[i], unit_nm)));
        csv.row(row);
      }
      if (r.essential_bottom) {
        csv.meta("essential_bottom", fmt(*r.essential_bottom));
        int below = 0;
        for (double v : r.values) below += v < *r.essential_bottom;
        csv.meta("below_essential", std::to_string(below));
        if (phys) csv.meta("gap_ev", fmt(physical_energy_ev(*r.essential_bottom - r.values[0], unit_nm)));
      }
      if (!export_path.empty()) {
        std::ostringstream os;
        export_coordinate(build_operator(spec, hs.back()), os);
        write_text(export_path, os.str(), std::cout);
      }
      emit(csv, pen ? open : osq, pen ? "oracle pencil" : "oracle square", out);
    } else if (*bsweep) {
      const auto gf = io::load_graph(graph);
      SweepOptions so;
      const auto r = sweep_thermo(gf.graph, gf.bc, beta, rho, parse_list(etas), so);
      Csv csv({"size", "mu", "rho0", "rho0_over_rho", "residual", "levels"});
      for (size_t i = 0; i < r.sizes.size(); ++i)
        csv.row({fmt(r.sizes[i]), fmt(r.states[i].mu), fmt(r.rho0[i]), fmt(r.rho0[i] / rho), fmt(r.states[i].residual),
                 std::to_string(r.states[i].levels.size())});
      csv.meta("verdict", "\"" + to_string(r.verdict) + "\"");
      emit(csv, bsweep, "bec sweep", out);
      json j = sweep_json(r, rho);
      j["command"] = "bec sweep";
      j["beta"] = beta;
      j["rho"] = rho;
      j["thresholds"] = rule_json(so.rule);
      j["cutoff"] = so.cutoff;
      emit_summary(j, summary, out);
    } else if (*bpairs) {
      PairOptions po;
      po.h = h;
      std::vector<double> Ls = parse_list(sizes);
      for (double& x : Ls) x *= d;
      const auto r = pair_condensation(d, beta, rho, Ls, sigma != 0 ? constant(sigma) : Profile{}, po);
      Csv csv({"size", "e0", "mu", "rho0", "rho0_over_rho", "residual", "levels"});
      for (size_t i = 0; i < Ls.size(); ++i) {
        const auto& st = r.sweep.states[i];
        csv.row({fmt(Ls[i]), fmt(r.e0[i]), fmt(st.mu), fmt(r.sweep.rho0[i]), fmt(r.sweep.rho0[i] / rho),
                 fmt(st.residual), std::to_string(st.levels.size())});
      }
      csv.meta("verdict", "\"" + to_string(r.sweep.verdict) + "\"");
      emit(csv, bpairs, "bec pairs", out);
      json j = sweep_json(r.sweep, rho);
      j["command"] = "bec pairs";
      j["beta"] = beta;
      j["rho"] = rho;
      j["sigma"] = sigma;
      j["e0"] = r.e0;
      j["rho_crit"] = r.rho_crit;
      j["thresholds"] = rule_json(po.rule);
      emit_summary(j, summary, out);
    } else if (*bsurf) {
      SurfaceModelSpec s;
      s.d = d;
      s.delta = delta;
      s.lambda_rep = lambda_rep;
      s.alpha_s = alpha_s;
      s.e = e_weight;
      s.h = h;
      std::vector<double> Ls = parse_list(sizes);
      for (double& x : Ls) x *= d;
      VerdictRule rule;
      const auto r = surface_model(s, beta, rho, Ls, rule);
      Csv csv({"size", "defects", "mu", "rho_s", "rho0", "rho0_over_rho", "fixed_point_residual", "iterations",
               "damping"});
      for (const auto& p : r.points)
        csv.row({fmt(p.L), std::to_string(p.defects), fmt(p.mu), fmt(p.rho_s), fmt(p.rho0), fmt(p.rho0 / rho),
                 fmt(p.residual), std::to_string(p.iterations), fmt(p.damping)});
      csv.meta("verdict", "\"" + to_string(r.bulk.verdict) + "\"");
      emit(csv, bsurf, "bec surface", out);
      json j = sweep_json(r.bulk, rho);
      j["command"] = "bec surface";
      j["beta"] = beta;
      j["rho"] = rho;
      j["destruction"] = {{"lhs_2_lambda_delta_rho", r.destruction_lhs},
                          {"rhs_e0_plus_alpha", r.destruction_rhs},
                          {"holds", r.destruction_condition}};
      j["thresholds"] = rule_json(rule);
      emit_summary(j, summary, out);
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
