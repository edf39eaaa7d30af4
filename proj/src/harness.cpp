#include "nonloc/harness.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <sstream>

namespace nonloc {

namespace {

nlohmann::json vec_json(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

struct PointResult {
  double error = 0.0, estimate = 0.0;
  int refinements = 0;
  bool failed = false;
  std::string message;
  std::exception_ptr fatal;
};

// Quadrature failures are recorded per point; anything else is a caller
// error and is rethrown after the sweep.
PointResult evaluate_point(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                           const Mat& m, const Vec& x, const QuadratureConfig& cfg, Route route) {
  PointResult r;
  try {
    const QuadResult q = apply_nonlocal_domain(u, family, domain, x, route, cfg);
    r.error = std::abs(q.value - apply_local(u, m, x));
    r.estimate = q.error_estimate;
    r.refinements = q.refinements;
  } catch (const NumericError& e) {
    r.failed = true;
    r.message = e.what();
  } catch (const CertificationError& e) {
    r.failed = true;
    r.message = e.what();
  } catch (...) {
    r.failed = true;
    r.fatal = std::current_exception();
  }
  return r;
}

ErrorField collect(const std::vector<PointResult>& results) {
  ErrorField f;
  const std::size_t n = results.size();
  f.error.resize(n);
  f.error_estimate.resize(n);
  f.failed.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PointResult& r = results[i];
    if (r.fatal) std::rethrow_exception(r.fatal);
    f.error[i] = r.failed ? 0.0 : r.error;
    f.error_estimate[i] = r.estimate;
    f.failed[i] = r.failed ? 1 : 0;
    if (r.failed) f.failures.push_back(std::to_string(i) + ": " + r.message);
    f.max_refinements = std::max(f.max_refinements, r.refinements);
  }
  return f;
}

double pairwise(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(v, h) + pairwise(v + h, n - h);
}

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

int default_grid_resolution(int dim) {
  switch (dim) {
    case 1: return 128;
    case 2: return 48;
    default: return 24;
  }
}

EvaluationGrid make_evaluation_grid(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                    int resolution) {
  const int n = domain.dim();
  if (u.dim != n || family.dim() != n) throw ParameterError("grid: dimensions differ");
  EvaluationGrid g;
  g.resolution = resolution > 0 ? resolution : default_grid_resolution(n);
  if (domain.bounded()) {
    std::tie(g.lo, g.hi) = domain.bounding_box();
  } else {
    if (!u.compact_support())
      throw UnsupportedError("an unbounded domain needs a compactly supported test function");
    const double reach = family.support_radius();
    if (!std::isfinite(reach)) throw UnsupportedError("an unbounded domain needs a compactly supported kernel");
    g.lo = u.support_lo.array() - reach;
    g.hi = u.support_hi.array() + reach;
    // An axis-aligned graph domain lies above min gamma = min(0, amplitude).
    if (domain.kind() == DomainKind::half_space_graph && domain.rotation().isIdentity(0.0))
      g.lo(n - 1) = std::max(g.lo(n - 1), std::min(0.0, domain.graph().amplitude));
  }
  const Vec h = (g.hi - g.lo) / g.resolution;
  g.cell_volume = h.prod();
  std::vector<int> idx(n, 0);
  const long total = static_cast<long>(std::pow(g.resolution, n));
  for (long c = 0; c < total; ++c) {
    long rest = c;
    Vec x(n);
    for (int k = n - 1; k >= 0; --k) {
      const long i = rest % g.resolution;
      rest /= g.resolution;
      x(k) = g.lo(k) + (static_cast<double>(i) + 0.5) * h(k);
    }
    if (domain.contains(x)) g.points.push_back(x);
  }
  return g;
}

ErrorField evaluate_error_field(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                const Mat& m, const std::vector<Vec>& points, const QuadratureConfig& cfg,
                                Route route, int workers) {
  const int threads = workers > 0 ? workers : omp_get_max_threads();
  const long n = static_cast<long>(points.size());
  std::vector<PointResult> results(points.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    results[static_cast<std::size_t>(i)] =
        evaluate_point(u, family, domain, m, points[static_cast<std::size_t>(i)], cfg, route);
  }
  return collect(results);
}

ErrorField evaluate_error_field_serial(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                       const Mat& m, const std::vector<Vec>& points,
                                       const QuadratureConfig& cfg, Route route) {
  std::vector<PointResult> results;
  results.reserve(points.size());
  for (const Vec& x : points) results.push_back(evaluate_point(u, family, domain, m, x, cfg, route));
  return collect(results);
}

double pairwise_sum(const std::vector<double>& v) { return pairwise(v.data(), v.size()); }

LpError lp_norm(const ErrorField& field, double cell_volume, double p) {
  if (!(p >= 1.0)) throw ParameterError("p must be >= 1");
  LpError out;
  out.p = p;
  out.points = static_cast<int>(field.error.size());
  std::vector<double> terms, upper;
  terms.reserve(field.error.size());
  upper.reserve(field.error.size());
  for (std::size_t i = 0; i < field.error.size(); ++i) {
    if (field.failed[i]) {
      ++out.points_failed;
      continue;
    }
    terms.push_back(std::pow(field.error[i], p) * cell_volume);
    upper.push_back(std::pow(field.error[i] + field.error_estimate[i], p) * cell_volume);
  }
  if (out.points_failed * 100 > out.points) {
    std::ostringstream msg;
    msg << out.points_failed << " of " << out.points << " points failed (more than 1%)";
    if (!field.failures.empty()) msg << "; first: " << field.failures.front();
    throw NumericError(msg.str());
  }
  out.value = std::pow(pairwise_sum(terms), 1.0 / p);
  out.error_estimate = std::pow(pairwise_sum(upper), 1.0 / p) - out.value;
  return out;
}

LpError lp_error(const TestFunction& u, const KernelFamily& family, const Domain& domain, const Mat& m,
                 double p, int grid_resolution, const QuadratureConfig& cfg, int workers) {
  if (!(p >= 1.0)) throw ParameterError("p must be >= 1");
  const EvaluationGrid grid = make_evaluation_grid(u, family, domain, grid_resolution);
  const ErrorField field = evaluate_error_field(u, family, domain, m, grid.points, cfg,
                                                Route::complement_decomposition, workers);
  return lp_norm(field, grid.cell_volume, p);
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& errors) {
  if (errors.size() < 4) throw ParameterError("a rate fit needs at least 4 (epsilon, error) pairs");
  std::vector<double> xs, ys;
  for (const auto& [eps, e] : errors) {
    if (!(eps > 0.0)) throw ParameterError("epsilon must be positive");
    if (e == 0.0) throw DegenerateFitError("zero error: the field is exact and has no rate");
    if (!(e > 0.0) || !std::isfinite(e)) throw ParameterError("errors must be positive and finite");
    xs.push_back(std::log(eps));
    ys.push_back(std::log(e));
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ParameterError("epsilons must not all be equal");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = 0; i < xs.size(); ++i)
    f.residual = std::max(f.residual, std::abs(ys[i] - (f.intercept + f.slope * xs[i])));
  return f;
}

double theoretical_rate(const Domain& domain, double p) { return domain.has_boundary() ? 1.0 / p : 1.0; }

bool ConvergenceReport::all_pass() const {
  if (rates.empty()) return false;
  for (const RateRecord& r : rates)
    if (!r.pass) return false;
  return true;
}

double sobolev_w3p_estimate(const TestFunction& u, const EvaluationGrid& grid, double p) {
  const int n = u.dim;
  std::vector<double> terms;
  terms.reserve(grid.points.size());
  for (const Vec& x : grid.points) {
    const Jet j = u.jet(x);
    double g2 = 0.0, h2 = 0.0, t2 = 0.0;
    for (int a = 0; a < n; ++a) {
      g2 += j.g[a] * j.g[a];
      for (int b = 0; b < n; ++b) {
        h2 += j.hess(a, b) * j.hess(a, b);
        for (int c = 0; c < n; ++c) t2 += j.third(a, b, c) * j.third(a, b, c);
      }
    }
    terms.push_back((std::pow(std::abs(j.v), p) + std::pow(g2, 0.5 * p) + std::pow(h2, 0.5 * p) +
                     std::pow(t2, 0.5 * p)) *
                    grid.cell_volume);
  }
  return std::pow(pairwise_sum(terms), 1.0 / p);
}

ConvergenceReport convergence_study(const StudySpec& spec, int workers) {
  const auto start = std::chrono::steady_clock::now();
  if (spec.epsilons.size() < 4) throw ParameterError("a study needs at least 4 epsilons");
  for (std::size_t i = 0; i < spec.epsilons.size(); ++i) {
    if (!(spec.epsilons[i] > 0.0)) throw ParameterError("epsilons must be positive");
    if (i > 0 && !(spec.epsilons[i] < spec.epsilons[i - 1]))
      throw ParameterError("epsilons must decrease strictly");
  }
  if (spec.p_values.empty()) throw ParameterError("a study needs at least one p");
  for (double p : spec.p_values)
    if (!(p >= 1.0)) throw ParameterError("p must be >= 1");
  if (spec.u.dim != spec.density.dim || spec.domain.dim() != spec.density.dim)
    throw ParameterError("study dimensions differ");

  ConvergenceReport rep;
  rep.name = spec.name;
  rep.density = to_json(spec.density);
  rep.domain = spec.domain.to_json();
  rep.test_function = to_json(spec.u);
  rep.diagnostic = spec.diagnostic;
  rep.workers = workers > 0 ? workers : omp_get_max_threads();
  rep.m = momentum_matrix(spec.density).m;

  if (spec.domain.has_boundary()) {
    rep.compat_residual = neumann_compat_check(spec.u, spec.domain, rep.m);
    if (rep.compat_residual > kCompatTolerance && !spec.diagnostic) {
      std::ostringstream msg;
      msg << "test function violates the natural boundary condition: max |M grad u . n| = "
          << rep.compat_residual;
      throw ContractError(msg.str());
    }
  }

  std::map<std::pair<std::size_t, std::size_t>, StudyRow> table;
  EvaluationGrid finest;
  for (std::size_t ke = 0; ke < spec.epsilons.size(); ++ke) {
    const double eps = spec.epsilons[ke];
    const KernelFamily family(spec.density, eps);
    EvaluationGrid grid = make_evaluation_grid(spec.u, family, spec.domain, spec.grid_resolution);
    const ErrorField field =
        evaluate_error_field(spec.u, family, spec.domain, rep.m, grid.points, spec.quadrature, spec.route, workers);
    for (const std::string& f : field.failures) {
      std::ostringstream line;
      line << "eps " << eps << " point " << f;
      rep.failures.push_back(line.str());
    }
    for (std::size_t kp = 0; kp < spec.p_values.size(); ++kp) {
      StudyRow row;
      row.p = spec.p_values[kp];
      row.epsilon = eps;
      row.lp = lp_norm(field, grid.cell_volume, row.p);
      row.max_refinements = field.max_refinements;
      table[{kp, ke}] = row;
    }
    if (ke + 1 == spec.epsilons.size()) finest = std::move(grid);
  }
  for (std::size_t kp = 0; kp < spec.p_values.size(); ++kp) {
    const double p = spec.p_values[kp];
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t ke = 0; ke < spec.epsilons.size(); ++ke) {
      const StudyRow& row = table.at({kp, ke});
      rep.rows.push_back(row);
      pairs.emplace_back(row.epsilon, row.lp.value);
    }
    RateRecord rr;
    rr.p = p;
    rr.theoretical_slope = theoretical_rate(spec.domain, p);
    try {
      rr.fit = fit_rate(pairs);
      if (rr.fit.residual <= kMaxFitResidual) {
        rr.fitted_slope = rr.fit.slope;
        rr.pass = rr.fit.slope >= rr.theoretical_slope - kRateTolerance;
        rr.superconvergent = rr.fit.slope > rr.theoretical_slope + kRateTolerance;
        if (!rr.pass) rr.note = "fitted slope below theoretical - 0.15";
      } else {
        rr.note = "fit residual above 0.25; slope not reported";
      }
    } catch (const DegenerateFitError& e) {
      rr.degenerate = true;
      rr.pass = true;
      rr.note = e.what();
    }
    if (spec.diagnostic && rep.compat_residual > kCompatTolerance) {
      rr.pass = false;
      rr.note += rr.note.empty() ? "diagnostic run: boundary condition violated" : "; diagnostic run";
    }
    rep.rates.push_back(rr);
    rep.w3p_norms.push_back(sobolev_w3p_estimate(spec.u, finest, p));
  }
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<Vec> transect(const Vec& from, const Vec& to, int points) {
  if (from.size() != to.size()) throw ParameterError("transect end points differ in dimension");
  if (points < 2) throw ParameterError("a transect needs at least 2 points");
  std::vector<Vec> out;
  for (int k = 0; k < points; ++k) out.push_back(from + (to - from) * (static_cast<double>(k) / (points - 1)));
  return out;
}

std::vector<ProfilePoint> boundary_layer_profile(const TestFunction& u, const KernelFamily& family,
                                                 const Domain& domain, const Mat& m,
                                                 const std::vector<Vec>& points, const QuadratureConfig& cfg,
                                                 Route route) {
  for (const Vec& x : points) {
    if (domain.has_boundary() && !(domain.boundary_distance(x) > 0.0))
      throw ContractError("point not interior: transect leaves the domain");
  }
  const ErrorField f = evaluate_error_field_serial(u, family, domain, m, points, cfg, route);
  if (!f.failures.empty()) throw NumericError("profile point " + f.failures.front());
  std::vector<ProfilePoint> out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    ProfilePoint pp;
    pp.x = points[i];
    pp.distance = domain.boundary_distance(points[i]);
    pp.error = f.error[i];
    pp.error_estimate = f.error_estimate[i];
    out.push_back(pp);
  }
  return out;
}

std::string errors_csv(const ConvergenceReport& r) {
  std::string out = "p,epsilon,lp_error,err_est,points_failed\n";
  for (const StudyRow& row : r.rows) {
    out += format_g17(row.p) + "," + format_g17(row.epsilon) + "," + format_g17(row.lp.value) + "," +
           format_g17(row.lp.error_estimate) + "," + std::to_string(row.lp.points_failed) + "\n";
  }
  return out;
}

nlohmann::json to_json(const ConvergenceReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const StudyRow& row : r.rows) {
    rows.push_back({{"p", row.p},
                    {"epsilon", row.epsilon},
                    {"lp_error", row.lp.value},
                    {"err_est", row.lp.error_estimate},
                    {"points", row.lp.points},
                    {"points_failed", row.lp.points_failed},
                    {"max_refinements", row.max_refinements}});
  }
  nlohmann::json rates = nlohmann::json::array();
  for (std::size_t i = 0; i < r.rates.size(); ++i) {
    const RateRecord& rr = r.rates[i];
    nlohmann::json j = {{"p", rr.p},
                        {"theoretical_slope", rr.theoretical_slope},
                        {"fitted_slope", rr.fitted_slope ? nlohmann::json(*rr.fitted_slope) : nlohmann::json()},
                        {"fit", {{"slope", rr.fit.slope}, {"intercept", rr.fit.intercept},
                                 {"residual", rr.fit.residual}}},
                        {"pass", rr.pass},
                        {"pass_rule", "fitted_slope >= theoretical_slope - 0.15"},
                        {"superconvergent", rr.superconvergent},
                        {"degenerate", rr.degenerate},
                        {"w3p_norm", i < r.w3p_norms.size() ? finite_or_null(r.w3p_norms[i]) : nlohmann::json()}};
    if (!rr.note.empty()) j["note"] = rr.note;
    rates.push_back(j);
  }
  return {{"name", r.name},
          {"density", r.density},
          {"domain", r.domain},
          {"test_function", r.test_function},
          {"momentum_matrix", matrix_json(r.m)},
          {"compat_residual", r.compat_residual},
          {"diagnostic", r.diagnostic},
          {"regularization",
           "u(x) - u(y) - grad u(x).(x - y): the gradient is taken at the evaluation point x"},
          {"rows", rows},
          {"rates", rates},
          {"all_pass", r.all_pass()},
          {"failures", r.failures},
          {"wall_seconds", r.wall_seconds},
          {"workers", r.workers}};
}

nlohmann::json to_json(const std::vector<ProfilePoint>& profile) {
  nlohmann::json out = nlohmann::json::array();
  for (const ProfilePoint& p : profile) {
    out.push_back({{"x", vec_json(p.x)},
                   {"distance", finite_or_null(p.distance)},
                   {"error", p.error},
                   {"err_est", p.error_estimate}});
  }
  return out;
}

}  // namespace nonloc
