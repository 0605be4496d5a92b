#pragma once

// Command-line front end. Exit codes: 0 success, 1 a check or tolerance
// failed, 2 invalid input. Data files carry no timestamps; logs go to stderr.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sturm/dfuncs.hpp"
#include "sturm/errors.hpp"
#include "sturm/green.hpp"
#include "sturm/pfss.hpp"
#include "sturm/potential.hpp"
#include "sturm/potential_io.hpp"
#include "sturm/spectrum.hpp"
#include "sturm/verify.hpp"

namespace sturm::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kInvalidInput = 2 };

inline void log(const std::string& msg) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::cerr << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << " sturm: " << msg << '\n';
}

struct Common {
  std::string potential;
  std::optional<double> L;
  std::optional<double> tol;
  std::string out = ".";
};

namespace detail {

inline void add_common(CLI::App* sub, Common& c, bool needs_L = true) {
  sub->add_option("--potential", c.potential, "potential JSON file")->required();
  if (needs_L) sub->add_option("--L", c.L, "half-width of the computational domain");
  sub->add_option("--tol", c.tol, "solver tolerance");
  sub->add_option("--out", c.out, "output directory");
}

inline std::filesystem::path out_dir(const Common& c) {
  std::filesystem::path dir(c.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create output directory '" + c.out + "'");
  return dir;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream os(p);
  if (!os) throw InvalidInput("cannot write '" + p.string() + "'");
  os << std::setprecision(17);
  return os;
}

inline double positive(std::optional<double> v, double fallback, const char* name) {
  const double x = v ? *v : fallback;
  if (!(x > 0.0) || !std::isfinite(x))
    throw InvalidInput(std::string(name) + " must be positive and finite");
  return x;
}

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  auto os = open_out(p);
  os << j.dump(2) << '\n';
}

inline nlohmann::json compactness_json(const CompactnessVerdict& v) {
  nlohmann::json j;
  j["verdict"] = to_string(v.verdict);
  j["from_d"] = to_string(v.from_d);
  j["from_d1"] = to_string(v.from_d1);
  j["from_d2"] = to_string(v.from_d2);
  j["one_sided_consistent"] = v.one_sided_consistent;
  j["max_abs_probe"] = v.max_abs_probe;
  j["evidence"] = nlohmann::json::array();
  for (const auto& r : v.evidence)
    j["evidence"].push_back({{"x", r.x},
                             {"d", r.d},
                             {"d1", r.d1},
                             {"d2", r.d2},
                             {"window_mass", r.window_mass},
                             {"mass_growth", r.mass_growth}});
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct SolveArgs {
  Common c;
  std::string f;
  std::string p = "2";
  std::optional<double> grid_step;
};

inline int cmd_solve(const SolveArgs& a) {
  const Potential q = load_potential(a.c.potential);
  const PiecewiseFunction f = load_rhs(a.f);
  const NormIndex p = parse_norm_index(a.p);
  const double L = detail::positive(a.c.L, q.domain_hint(), "L");
  const double tol = detail::positive(a.c.tol, 1e-8, "tol");
  BvpOptions opts;
  opts.riccati_tol = std::min(1e-10, tol);
  opts.grid_step = a.grid_step;
  if (opts.grid_step && !(*opts.grid_step > 0.0)) throw InvalidInput("grid step must be positive");
  log("solve: L = " + std::to_string(L) + ", p = " + a.p);
  SolutionReport rep;
  try {
    rep = solve_bvp(q, f, p, L, tol, opts);
  } catch (const RefinementFailure& e) {
    log(std::string("solve: ") + e.what());
    return kCheckFailed;
  }
  const auto dir = detail::out_dir(a.c);
  {
    auto os = detail::open_out(dir / "solution.csv");
    os << "x,y,y_prime\n";
    for (std::size_t i = 0; i < rep.grid.size(); ++i)
      os << rep.grid[i] << ',' << rep.y[i] << ',' << rep.y_prime[i] << '\n';
  }
  nlohmann::json j;
  j["L"] = L;
  j["tol"] = tol;
  j["grid_points"] = rep.grid.size();
  j["residual_norm"] = rep.residual_norm;
  j["residual_witness"] = rep.residual_witness;
  j["decay"] = {{"y_minus_L", rep.decay.y_minus},
                {"y_plus_L", rep.decay.y_plus},
                {"y_prime_minus_L", rep.decay.yp_minus},
                {"y_prime_plus_L", rep.decay.yp_plus}};
  j["p"] = to_string(rep.p);
  j["class_verdict"] = rep.class_verdict;
  j["note"] = rep.note;
  j["norm_y"] = rep.norm_y;
  j["norm_f"] = rep.norm_f;
  j["tail_bound"] = rep.tail_bound;
  if (rep.compactness) j["compactness"] = detail::compactness_json(*rep.compactness);
  detail::write_json(dir / "report.json", j);
  log("solve: residual " + std::to_string(rep.residual_norm) + ", verdict " + rep.class_verdict);
  return kOk;
}

// ---------------------------------------------------------------------------

struct DfuncsArgs {
  Common c;
  std::vector<double> grid;
  std::optional<double> from, to;
  std::optional<std::size_t> n;
};

inline int cmd_dfuncs(const DfuncsArgs& a) {
  const Potential q = load_potential(a.c.potential);
  const double tol = detail::positive(a.c.tol, 1e-12, "tol");
  std::vector<double> grid = a.grid;
  if (a.from || a.to || a.n) {
    if (!grid.empty()) throw InvalidInput("give either --grid or --from/--to/--n");
    if (!(a.from && a.to && a.n)) throw InvalidInput("--from, --to and --n go together");
    if (!(*a.from <= *a.to)) throw InvalidInput("--from must not exceed --to");
    if (*a.n == 0) throw InvalidInput("--n must be positive");
    for (std::size_t i = 0; i < *a.n; ++i)
      grid.push_back(*a.n == 1 ? *a.from
                               : *a.from + (*a.to - *a.from) * static_cast<double>(i) /
                                               static_cast<double>(*a.n - 1));
  }
  if (grid.empty()) throw InvalidInput("grid is empty");
  for (double x : grid)
    if (!std::isfinite(x)) throw InvalidInput("grid points must be finite");
  log("dfuncs: " + std::to_string(grid.size()) + " points");
  const DFunctions df = solve_dfuncs(q, grid, tol);
  auto os = detail::open_out(detail::out_dir(a.c) / "dfuncs.csv");
  os << "x,d,d1,d2\n";
  for (std::size_t i = 0; i < grid.size(); ++i)
    os << df.grid[i] << ',' << df.d[i] << ',' << df.d1[i] << ',' << df.d2[i] << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  Common c;
  std::size_t n = 500;
  double corrupt_rho = 1.0;
  std::vector<double> probes{4.0, 8.0, 16.0};
  std::string p = "2";
  std::uint64_t seed = SuiteOptions{}.seed;
};

inline int cmd_verify(const VerifyArgs& a) {
  const Potential q = load_potential(a.c.potential);
  const double L = detail::positive(a.c.L, 10.0, "L");
  SuiteOptions opt;
  opt.margin_tol = detail::positive(a.c.tol, opt.margin_tol, "tol");
  opt.seed = a.seed;
  opt.rho_fault_factor = detail::positive(a.corrupt_rho, 1.0, "corrupt-rho factor");
  if (a.n < 2) throw InvalidInput("--n must be at least 2");
  log("verify: L = " + std::to_string(L) + ", n = " + std::to_string(a.n));

  const SuiteReport suite = run_inequality_suite(q, L, a.n, opt);
  const CheckResult witness = lower_bound_witness(q, L, opt.margin_tol, opt.riccati_tol);
  const KolmogorovReport kol = kolmogorov_compactness_probe(q, a.probes, parse_norm_index(a.p));

  nlohmann::json j;
  j["suite"] = to_json(suite);
  j["lower_bound_witness"] = to_json(witness);
  j["kolmogorov"] = to_json(kol);
  const bool ok = suite.passed() && witness.passed() && kol.check.passed();
  j["passed"] = ok;
  detail::write_json(detail::out_dir(a.c) / "verify.json", j);
  for (const auto& c : suite.checks)
    if (!c.passed()) log("verify: FAILED " + c.check_id + ", margin " + std::to_string(c.worst_margin));
  if (!witness.passed()) log("verify: FAILED " + witness.check_id);
  if (!kol.check.passed()) log("verify: FAILED " + kol.check.check_id);
  return ok ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct SpectrumArgs {
  Common c;
  std::size_t n = 4000;
  std::size_t k = 5;
};

inline int cmd_spectrum(const SpectrumArgs& a) {
  const Potential q = load_potential(a.c.potential);
  const double L = detail::positive(a.c.L, q.domain_hint(), "L");
  check_spectral_request(L, a.n, a.k);
  log("spectrum: L = " + std::to_string(L) + ", n = " + std::to_string(a.n));
  const SpectralResult r = eigen_truncated(q, L, a.n, a.k);
  const DiscretenessReport dr = discreteness_diagnostic(q, a.k);

  nlohmann::json j;
  j["eigenvalues"] = r.eigenvalues;
  j["convergence"] = r.convergence;
  j["verdict"] = to_string(dr.verdict);
  j["L"] = r.L;
  j["n"] = r.n;
  j["method"] = r.method;
  nlohmann::json diag;
  diag["radii"] = dr.radii;
  diag["meshes"] = dr.meshes;
  diag["lowest"] = dr.lowest;
  diag["level"] = dr.level;
  diag["counts_below_level"] = dr.counts;
  diag["max_relative_change"] = dr.max_relative_change;
  diag["stabilized"] = dr.stabilized;
  diag["densifying"] = dr.densifying;
  diag["compactness"] = to_string(dr.compactness);
  diag["consistent"] = dr.consistent;
  j["diagnostic"] = diag;
  detail::write_json(detail::out_dir(a.c) / "spectrum.json", j);
  const bool bounded = r.eigenvalues.front() >= 1.0 - 1e-8;
  if (!bounded) log("spectrum: lowest eigenvalue below 1");
  return bounded ? kOk : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct KernelArgs {
  Common c;
  std::size_t n = 101;
};

inline int cmd_kernel(const KernelArgs& a) {
  const Potential q = load_potential(a.c.potential);
  const double L = detail::positive(a.c.L, q.domain_hint(), "L");
  const double tol = detail::positive(a.c.tol, 1e-10, "tol");
  if (a.n < 2) throw InvalidInput("--n must be at least 2");
  KernelOptions ko;
  ko.pfss.tol = tol;
  ko.with_dfuncs = false;
  const GreenKernel k = GreenKernel::build(q, L, ko);
  const auto dir = detail::out_dir(a.c);
  {
    auto os = detail::open_out(dir / "kernel.csv");
    os << "x,t,G\n";
    for (std::size_t i = 0; i < a.n; ++i) {
      const double x = -L + 2.0 * L * static_cast<double>(i) / static_cast<double>(a.n - 1);
      for (std::size_t j = 0; j < a.n; ++j) {
        const double t = -L + 2.0 * L * static_cast<double>(j) / static_cast<double>(a.n - 1);
        os << x << ',' << t << ',' << k.eval(x, t) << '\n';
      }
    }
  }
  auto os = detail::open_out(dir / "pfss.csv");
  k.pfss().write_csv(os);
  return kOk;
}

// ---------------------------------------------------------------------------

inline int run_cli(int argc, char** argv) {
  CLI::App app{"Green kernels, length scales and spectra of -y'' + q y on the line"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "solve -y'' + q y = f");
  detail::add_common(s, solve.c);
  s->add_option("--f", solve.f, "right-hand side JSON file")->required();
  s->add_option("--p", solve.p, "norm index: 1, 2 or inf");
  s->add_option("--grid-step", solve.grid_step, "grid spacing");

  DfuncsArgs df;
  auto* d = app.add_subcommand("dfuncs", "tabulate d, d1, d2");
  detail::add_common(d, df.c, false);
  d->add_option("--grid", df.grid, "comma-separated points")->delimiter(',');
  d->add_option("--from", df.from);
  d->add_option("--to", df.to);
  d->add_option("--n", df.n);

  VerifyArgs ver;
  auto* v = app.add_subcommand("verify", "run the inequality suite");
  detail::add_common(v, ver.c);
  v->add_option("--n", ver.n, "number of check points");
  v->add_option("--corrupt-rho", ver.corrupt_rho, "fault injection: scale stored rho");
  v->add_option("--probes", ver.probes, "local-mass probe radii")->delimiter(',');
  v->add_option("--p", ver.p, "norm index for the local-mass probe");
  v->add_option("--seed", ver.seed, "seed for random pairs");

  SpectrumArgs sp;
  auto* e = app.add_subcommand("spectrum", "lowest eigenvalues on a truncated domain");
  detail::add_common(e, sp.c);
  e->add_option("--n", sp.n, "mesh count");
  e->add_option("--k", sp.k, "number of eigenvalues");

  KernelArgs ke;
  auto* g = app.add_subcommand("kernel", "dump G(x, t) on a square grid");
  detail::add_common(g, ke.c);
  g->add_option("--n", ke.n, "points per axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kInvalidInput;
  }

  try {
    if (*s) return cmd_solve(solve);
    if (*d) return cmd_dfuncs(df);
    if (*v) return cmd_verify(ver);
    if (*e) return cmd_spectrum(sp);
    if (*g) return cmd_kernel(ke);
  } catch (const InvalidInput& err) {
    log(std::string("invalid input: ") + err.what());
    return kInvalidInput;
  } catch (const RefinementFailure& err) {
    log(std::string("tolerance not reached: ") + err.what());
    return kCheckFailed;
  } catch (const std::exception& err) {
    log(std::string("failure: ") + err.what());
    return kCheckFailed;
  }
  return kInvalidInput;
}

}  // namespace sturm::cli
