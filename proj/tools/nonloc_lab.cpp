// nonloc-lab: kernel certification, single-point evaluation, epsilon studies
// and boundary-layer profiles driven by JSON configs.
//
// Exit codes: 0 ok, 1 failed check or evaluation error, 2 schema error,
// 3 numeric non-convergence.

#include "nonloc/config.hpp"
#include "nonloc/errors.hpp"
#include "nonloc/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace nonloc;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailed = 1, kSchema = 2, kNumeric = 3 };

struct Options {
  std::string config;
  std::string out = ".";
  int workers = 0;
  unsigned seed = 12345;
  bool strict = false;
  bool dry_run = false;
  std::vector<double> x;
  double epsilon = 0.0;
  std::string route;
};

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

TestFunction require_test_function(const RunConfig& rc, const Mat& m) {
  if (rc.test_function.is_null()) throw SchemaError("config.test_function is required for this subcommand");
  return test_function_from_json(rc.test_function, rc.domain, m);
}

int workers_of(const Options& o) { return o.workers > 0 ? o.workers : omp_get_max_threads(); }

bool tails_ok(const DensitySpec& d, const std::vector<TailMass>& tails, double delta, std::string& why) {
  for (std::size_t i = 0; i < tails.size(); ++i) {
    const bool vanishes = d.compact() && tails[i].epsilon * d.support_radius < delta;
    if (vanishes) {
      if (tails[i].mass != 0.0) {
        why = "tail mass not exactly zero once eps * R_supp < delta";
        return false;
      }
      continue;
    }
    if (i > 0 && !(tails[i].mass < tails[i - 1].mass)) {
      why = "tail mass not strictly decreasing";
      return false;
    }
  }
  return true;
}

int cmd_kernel_check(const RunConfig& rc, const Options& o) {
  const DensitySpec& d = rc.density;
  if (o.dry_run) {
    std::cout << "kernel-check: density " << d.kind << " (n = " << d.dim << ")\n"
              << "  integrability, growth (" << rc.checks.growth_samples << " shells), evenness ("
              << rc.checks.evenness_samples << " samples, seed " << o.seed << ")\n"
              << "  dirac tails beyond " << rc.checks.delta << " at " << rc.checks.dirac_epsilons.size()
              << " epsilons, mass at " << rc.checks.mass_epsilons.size() << " epsilons\n"
              << "  momentum matrix and moment cancellation\n"
              << "  output: " << (std::filesystem::path(o.out) / "certification.json").string() << "\n";
    return kOk;
  }
  json records = json::array();
  bool all = true;
  auto add = [&](const CertificationRecord& r) {
    records.push_back(to_json(r));
    all = all && r.pass;
  };
  add(check_integrability(d, rc.quadrature));
  add(check_growth_bounds(d, rc.checks.growth_samples));
  add(check_evenness(d, rc.checks.evenness_samples, o.seed));

  json mass = json::array();
  const double m1 = scaled_mass(KernelFamily(d, 1.0), config_for(d, rc.quadrature)).value;
  bool mass_ok = true;
  for (double eps : rc.checks.mass_epsilons) {
    const QuadResult q = scaled_mass(KernelFamily(d, eps), config_for(d, rc.quadrature));
    const double gap = std::abs(q.value - m1) / std::abs(m1);
    mass_ok = mass_ok && gap <= 1e-8;
    mass.push_back({{"epsilon", eps}, {"mass", q.value}, {"err_est", q.error_estimate}, {"relative_gap", gap}});
  }
  all = all && mass_ok;

  const auto tails = check_dirac_property(d, rc.checks.delta, rc.checks.dirac_epsilons, rc.quadrature);
  json tail_json = json::array();
  for (const TailMass& t : tails)
    tail_json.push_back({{"epsilon", t.epsilon}, {"mass", t.mass}, {"err_est", t.error_estimate}});
  std::string tail_why;
  const bool tail_ok = tails_ok(d, tails, rc.checks.delta, tail_why);
  all = all && tail_ok;

  const MomentumMatrix mm = momentum_matrix(d, rc.quadrature);
  const MomentCheck mc =
      moment_cancellation_check(d, mm.a, default_rotations(d.dim), default_zn_samples(), rc.quadrature);
  const double moment_tol = d.is_radial ? 1e-8 : 1e-6;
  const bool moment_ok = mc.max_moment <= moment_tol;
  all = all && moment_ok;

  json out = {{"density", to_json(d)},
              {"records", records},
              {"mass_preservation", {{"pass", mass_ok}, {"tolerance", 1e-8}, {"samples", mass}}},
              {"dirac_tails", {{"pass", tail_ok}, {"delta", rc.checks.delta}, {"samples", tail_json}}},
              {"momentum", to_json(mm)},
              {"moment_cancellation", to_json(mc)},
              {"moment_tolerance", moment_tol},
              {"moment_pass", moment_ok},
              {"seed", o.seed},
              {"all_pass", all}};
  if (!tail_ok) out["dirac_tails"]["detail"] = tail_why;
  write_file(std::filesystem::path(o.out) / "certification.json", out.dump(2) + "\n");
  std::cout << "kernel-check " << (all ? "passed" : "FAILED") << "\n";
  return all ? kOk : kFailed;
}

int cmd_apply(const RunConfig& rc, const Options& o) {
  ApplyOptions a = rc.apply;
  if (!o.x.empty()) a.x = to_vec(o.x);
  if (o.epsilon > 0.0) a.epsilon = o.epsilon;
  if (!o.route.empty()) {
    try {
      a.route = route_from_string(o.route);
    } catch (const ParameterError& e) {
      throw SchemaError(std::string("--route: ") + e.what());
    }
  }
  if (!a.x) throw SchemaError("apply needs a point (--x or apply.x)");
  if (!a.epsilon || !(*a.epsilon > 0.0)) throw SchemaError("apply needs a positive epsilon");
  if (a.x->size() != rc.density.dim) throw SchemaError("apply.x has the wrong dimension");
  const Mat m = momentum_matrix(rc.density, rc.quadrature).m;
  const TestFunction u = require_test_function(rc, m);
  if (o.dry_run) {
    std::cout << "apply: " << u.recipe << " at x = " << vec_json(*a.x).dump() << ", eps = " << *a.epsilon
              << ", route " << to_string(a.route) << "\n";
    return kOk;
  }
  const KernelFamily fam(rc.density, *a.epsilon);
  double value = 0.0, estimate = 0.0;
  try {
    if (a.route == Route::pv_limit) {
      if (rc.domain.has_boundary()) throw UnsupportedError("route pv_limit is available on the full space only");
      std::vector<double> radii;
      for (int k = 1; k <= 8; ++k) radii.push_back(*a.epsilon * std::ldexp(1.0, -k));
      const PvResult pv = apply_nonlocal_pv(u, fam, *a.x, radii, rc.quadrature);
      value = pv.limit;
      estimate = pv.limit_error;
    } else {
      const QuadResult q = apply_nonlocal_domain(u, fam, rc.domain, *a.x, a.route, rc.quadrature);
      value = q.value;
      estimate = q.error_estimate;
    }
  } catch (const std::exception& e) {
    std::cerr << "apply: " << e.what() << "\n";
    return kFailed;
  }
  const json rec = {{"x", vec_json(*a.x)},
                    {"nonlocal", value},
                    {"local", apply_local(u, m, *a.x)},
                    {"route", to_string(a.route)},
                    {"err_est", estimate}};
  std::cout << rec.dump() << "\n";
  return kOk;
}

int cmd_study(const RunConfig& rc, const Options& o) {
  StudySpec s;
  s.name = rc.raw.value("name", std::string("study"));
  s.density = rc.density;
  s.domain = rc.domain;
  if (!rc.p_values.empty()) s.p_values = rc.p_values;
  if (!rc.epsilons.empty()) s.epsilons = rc.epsilons;
  if (s.epsilons.size() < 4) throw SchemaError("a study needs at least 4 epsilons");
  s.grid_resolution = rc.grid_resolution;
  s.quadrature = rc.quadrature;
  const Mat m = momentum_matrix(rc.density, rc.quadrature).m;
  s.u = require_test_function(rc, m);

  const double compat = rc.domain.has_boundary() ? neumann_compat_check(s.u, rc.domain, m) : 0.0;
  if (compat > kCompatTolerance) {
    if (o.strict) {
      std::cerr << "study: test function violates M grad u . n = 0 (max " << compat
                << "); refusing to run with --strict\n";
      return kFailed;
    }
    std::cerr << "study: warning: test function violates M grad u . n = 0 (max " << compat
              << "); running as a diagnostic\n";
    s.diagnostic = true;
  }
  if (o.dry_run) {
    std::cout << "study " << s.name << ": " << s.u.recipe << " on " << rc.domain.to_json().dump() << "\n"
              << "  p = " << json(s.p_values).dump() << ", eps = " << json(s.epsilons).dump() << "\n"
              << "  grid " << (s.grid_resolution > 0 ? s.grid_resolution : default_grid_resolution(s.u.dim))
              << " cells per axis, " << workers_of(o) << " workers\n"
              << "  output: report.json, errors.csv in " << o.out << "\n";
    return kOk;
  }
  const ConvergenceReport r = convergence_study(s, workers_of(o));
  const std::filesystem::path dir(o.out);
  write_file(dir / "report.json", to_json(r).dump(2) + "\n");
  write_file(dir / "errors.csv", errors_csv(r));
  for (const RateRecord& rr : r.rates) {
    std::cout << "p = " << rr.p << ": theoretical " << rr.theoretical_slope << ", fitted "
              << (rr.fitted_slope ? std::to_string(*rr.fitted_slope) : std::string("n/a")) << ", "
              << (rr.pass ? "pass" : "FAIL") << (rr.superconvergent ? " (superconvergent)" : "")
              << (rr.note.empty() ? "" : " [" + rr.note + "]") << "\n";
  }
  return r.all_pass() ? kOk : kFailed;
}

int cmd_profile(const RunConfig& rc, const Options& o) {
  const ProfileOptions& p = rc.profile;
  if (!p.epsilon || !(*p.epsilon > 0.0)) throw SchemaError("profile.epsilon is required");
  if (!p.from || !p.to) throw SchemaError("profile.from and profile.to are required");
  if (p.from->size() != rc.density.dim || p.to->size() != rc.density.dim)
    throw SchemaError("profile end points have the wrong dimension");
  const Mat m = momentum_matrix(rc.density, rc.quadrature).m;
  const TestFunction u = require_test_function(rc, m);
  if (o.dry_run) {
    std::cout << "profile: " << p.points << " points from " << vec_json(*p.from).dump() << " to "
              << vec_json(*p.to).dump() << ", eps = " << *p.epsilon << "\n";
    return kOk;
  }
  const KernelFamily fam(rc.density, *p.epsilon);
  const auto prof =
      boundary_layer_profile(u, fam, rc.domain, m, transect(*p.from, *p.to, p.points), rc.quadrature);
  std::string csv = "distance,error,err_est\n";
  for (const ProfilePoint& q : prof) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", q.distance, q.error, q.error_estimate);
    csv += buf;
  }
  const std::filesystem::path dir(o.out);
  write_file(dir / "profile.json", json{{"epsilon", *p.epsilon}, {"points", to_json(prof)}}.dump(2) + "\n");
  write_file(dir / "profile.csv", csv);
  std::cout << "profile: " << prof.size() << " points written\n";
  return kOk;
}

int run(const std::string& sub, const Options& o) {
  try {
    const RunConfig rc = load_run_config(o.config);
    if (sub == "kernel-check") return cmd_kernel_check(rc, o);
    if (sub == "apply") return cmd_apply(rc, o);
    if (sub == "study") return cmd_study(rc, o);
    return cmd_profile(rc, o);
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kSchema;
  } catch (const UnsupportedError& e) {
    std::cerr << "schema error: " << e.what() << "\n";
    return kSchema;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlocal-to-local convergence lab"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  for (const char* name : {"kernel-check", "apply", "study", "profile"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", o.config, "JSON config file")->required();
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--workers", o.workers, "worker threads (0 = all available)")->check(CLI::NonNegativeNumber);
    sub->add_option("--seed", o.seed, "seed for sampled checks");
    sub->add_flag("--strict", o.strict, "refuse to run on a violated boundary condition");
    sub->add_flag("--dry-run", o.dry_run, "validate the config and print the plan");
    if (std::string(name) == "apply") {
      sub->add_option("--x", o.x, "evaluation point")->expected(1, 3);
      sub->add_option("--epsilon", o.epsilon, "kernel scale");
      sub->add_option("--route", o.route, "regularized | complement_decomposition | pv_limit");
    }
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kSchema;
  }
  return run(chosen, o);
}
