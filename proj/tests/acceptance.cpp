// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include "nonloc/errors.hpp"
#include "nonloc/harness.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace nonloc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [fail: " << what << "]";
    }
  }
};

DensitySpec bump_density(int dim, double alpha = 1.0) {
  BumpOptions o;
  o.dim = dim;
  o.alpha = alpha;
  return make_bump_density(o);
}

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double slope_of(const ConvergenceReport& r, double p) {
  for (const RateRecord& rr : r.rates)
    if (rr.p == p) return rr.fitted_slope ? *rr.fitted_slope : std::nan("");
  return std::nan("");
}

std::string slopes(const ConvergenceReport& r) {
  std::ostringstream s;
  for (const RateRecord& rr : r.rates) {
    s << " p=" << rr.p << ":";
    if (rr.fitted_slope)
      s << *rr.fitted_slope;
    else
      s << "n/a(" << rr.note << ")";
  }
  return s.str();
}

QuadratureConfig tight() {
  QuadratureConfig c;
  c.rel_tol = 1e-11;
  c.abs_tol = 1e-13;
  return c;
}

void criterion_fullspace_rate(Outcome& o) {
  StudySpec s;
  s.name = "full space n=1";
  s.density = bump_density(1);
  s.domain = Domain::full_space(1);
  s.u = make_bump_function(zeros(1), 1.0);
  s.p_values = {1.0, 2.0};
  s.epsilons = {0.4, 0.2, 0.1, 0.05};
  const auto t0 = Clock::now();
  const ConvergenceReport r = convergence_study(s, 1);
  const double t = seconds_since(t0);
  o.detail << "slopes" << slopes(r) << ", " << t << " s serial";
  for (double p : s.p_values) o.require(slope_of(r, p) >= 0.85, "slope >= 0.85");
  o.require(r.failures.empty(), "no failed points");
  o.require(t <= 300.0, "runtime <= 5 min");
}

void criterion_interval_rate(Outcome& o) {
  StudySpec s;
  s.name = "interval cos";
  s.density = bump_density(1);
  s.domain = Domain::interval(0.0, 1.0);
  s.u = make_compatible_function(s.domain, momentum_matrix(s.density).m, "cos_k", {{"k", 1}});
  s.p_values = {1.0, 2.0, 4.0};
  s.epsilons = {0.4, 0.2, 0.1, 0.05};
  const auto t0 = Clock::now();
  const ConvergenceReport r = convergence_study(s, 1);
  const double t = seconds_since(t0);
  o.detail << "slopes" << slopes(r) << ", " << t << " s serial";
  for (double p : s.p_values) o.require(slope_of(r, p) >= 1.0 / p - 0.15, "slope >= 1/p - 0.15");
  o.require(slope_of(r, 2.0) <= slope_of(r, 1.0) - 0.2, "p=2 slope at least 0.2 below p=1");
  o.require(t <= 600.0, "runtime <= 10 min");
}

void criterion_halfspace_rate(Outcome& o) {
  const auto t0 = Clock::now();
  for (double amplitude : {0.0, 0.1}) {
    GraphFunction g;
    g.amplitude = amplitude;
    g.width = 1.0;
    StudySpec s;
    s.name = amplitude == 0.0 ? "flat half space" : "curved half space";
    s.density = bump_density(2);
    s.domain = Domain::half_space_graph(2, g);
    s.u = make_compatible_function(s.domain, momentum_matrix(s.density).m, "normal_bump", {{"sigma", 1.0}});
    s.p_values = {2.0};
    s.epsilons = {0.4, 0.2, 0.1, 0.05};
    s.grid_resolution = 48;
    const ConvergenceReport r = convergence_study(s, 8);
    o.detail << s.name << slopes(r) << " (" << r.failures.size() << " failed points); ";
    o.require(slope_of(r, 2.0) >= 0.35, s.name + " slope >= 0.35");
  }
  const double t = seconds_since(t0);
  o.detail << t << " s with 8 workers";
  o.require(t <= 1200.0, "runtime <= 20 min");
}

void criterion_quadratic_exactness(Outcome& o) {
  // Oracle momentum matrices: a radial density has M = (||rho||_1 / 2n) I
  // and the anisotropic construction from a mass-2n base has M = B^-2.
  struct Case {
    std::string name;
    DensitySpec d;
    Mat m;
  };
  auto radial_m = [](const DensitySpec& d) {
    const double mass = scaled_mass(KernelFamily(d, 1.0), config_for(d)).value;
    return Mat(identity(d.dim) * (mass / (2.0 * d.dim)));
  };
  const Mat b = diag2(2.0, 0.5);
  std::vector<Case> cases = {{"bump 1d", bump_density(1), identity(1)},
                             {"bump 2d", bump_density(2), identity(2)},
                             {"fractional s=0.25", make_fractional_density(2, 0.25), Mat()},
                             {"fractional s=0.75", make_fractional_density(2, 0.75), Mat()},
                             {"anisotropic", make_anisotropic_density(bump_density(2), b), Mat()}};
  cases[2].m = radial_m(cases[2].d);
  cases[3].m = radial_m(cases[3].d);
  cases[4].m = (b * b).inverse();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (const Case& c : cases) {
    const int n = c.d.dim;
    Mat h(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) h(i, j) = h(j, i) = (i == j ? 2.0 + i : 0.7);
    const TestFunction u = make_quadratic_function(h, Vec::LinSpaced(n, 0.5, -1.0), 0.3);
    const double target = -(c.m.cwiseProduct(h)).sum();
    for (double eps : {1.0, 0.1}) {
      const KernelFamily fam(c.d, eps);
      for (int k = 0; k < 10; ++k) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x(i) = dist(rng);
        const double v = apply_nonlocal_fullspace(u, fam, x).value;
        worst = std::max(worst, std::abs(v - target));
      }
    }
  }
  o.detail << "max |L_eps u + M:D2u| = " << worst << " over 5 kernels x 2 eps x 10 points";
  o.require(worst <= 1e-6, "<= 1e-6");
}

void criterion_momentum_identities(Outcome& o) {
  const Mat b = diag2(2.0, 0.5);
  const DensitySpec base = bump_density(2);
  const MomentumMatrix mm = momentum_matrix(make_anisotropic_density(base, b));
  const Mat binv = b.inverse();
  const double em = max_abs(mm.m - binv * binv);
  const double ea = max_abs(mm.a - binv);
  o.detail << "||rho0||_1 = " << scaled_mass(KernelFamily(base, 1.0), config_for(base)).value
           << ", max |M - B^-2| = " << em << ", max |A - B^-1| = " << ea;
  o.require(em <= 1e-6, "M within 1e-6 of B^-2");
  o.require(ea <= 1e-6, "A within 1e-6 of B^-1");
}

void criterion_moment_cancellation(Outcome& o) {
  auto moment = [](const DensitySpec& d) {
    const MomentumMatrix mm = momentum_matrix(d);
    return moment_cancellation_check(d, mm.a, default_rotations(d.dim), default_zn_samples()).max_moment;
  };
  double radial = 0.0;
  for (const DensitySpec& d : {bump_density(2), bump_density(3), make_fractional_density(2, 0.75)})
    radial = std::max(radial, moment(d));
  const double aniso = moment(make_anisotropic_density(bump_density(2), diag2(2.0, 0.5)));
  const double broken = moment(make_shifted_density(bump_density(2), make_vec({0.3, 0.0})));
  o.detail << "radial " << radial << ", anisotropic " << aniso << ", shifted " << broken;
  o.require(radial <= 1e-8, "radial <= 1e-8");
  o.require(aniso <= 1e-6, "anisotropic <= 1e-6");
  o.require(broken > 1e-3, "broken kernel > 1e-3");
}

void criterion_singular_wellposed(Outcome& o) {
  const std::vector<DensitySpec> kernels = {make_fractional_density(1, 0.75), make_fractional_density(2, 0.75)};
  double worst_est = 0.0, worst_pv = 0.0;
  bool finite = true;
  int evaluations = 0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-0.6, 0.6);
  for (const DensitySpec& d : kernels) {
    const int n = d.dim;
    const TestFunction u = make_bump_function(Vec::Constant(n, 0.1), 1.0);
    for (double eps : {1.0, 0.5, 0.1}) {
      const KernelFamily fam(d, eps);
      for (int k = 0; k < 5; ++k) {
        Vec x(n);
        for (int i = 0; i < n; ++i) x(i) = dist(rng);
        const QuadResult q = apply_nonlocal_fullspace(u, fam, x);
        ++evaluations;
        finite = finite && std::isfinite(q.value) && std::isfinite(q.error_estimate);
        worst_est = std::max(worst_est, q.error_estimate / std::abs(q.value));
      }
    }
    const KernelFamily fam(d, 0.5);
    const Vec x = Vec::Constant(n, 0.25);
    std::vector<double> radii;
    for (int k = 3; k <= 14; ++k) radii.push_back(0.5 * std::ldexp(1.0, -k));
    const PvResult pv = apply_nonlocal_pv(u, fam, x, radii, tight());
    const double reg = apply_nonlocal_fullspace(u, fam, x, tight()).value;
    worst_pv = std::max(worst_pv, std::abs(pv.limit - reg) / std::abs(reg));
  }
  // interval routes with the singular kernel
  const Domain om = Domain::interval(0.0, 1.0);
  const DensitySpec d1 = kernels[0];
  const TestFunction c = make_compatible_function(om, momentum_matrix(d1).m, "cos_k", {{"k", 1}});
  for (Route route : {Route::regularized, Route::complement_decomposition}) {
    for (double x0 : {0.1, 0.3, 0.7}) {
      const QuadResult q = apply_nonlocal_domain(c, KernelFamily(d1, 0.2), om, make_vec({x0}), route);
      ++evaluations;
      finite = finite && std::isfinite(q.value) && std::isfinite(q.error_estimate);
      worst_est = std::max(worst_est, q.error_estimate / std::abs(q.value));
    }
  }
  o.detail << evaluations << " evaluations, worst relative estimate " << worst_est
           << ", PV vs regularized relative gap " << worst_pv;
  o.require(finite, "finite values");
  o.require(worst_est <= 1e-6, "estimates <= 1e-6 relative");
  o.require(worst_pv <= 1e-6, "PV limit within 1e-6");
}

void criterion_route_equivalence(Outcome& o) {
  const DensitySpec d = bump_density(1);
  const Domain om = Domain::interval(0.0, 1.0);
  const TestFunction u = make_compatible_function(om, momentum_matrix(d).m, "cos_k", {{"k", 1}});
  double worst = 0.0;
  for (double eps : {0.2, 0.05}) {
    const KernelFamily fam(d, eps);
    for (int k = 0; k < 20; ++k) {
      const Vec x = make_vec({(k + 0.5) / 20.0});
      const double a = apply_nonlocal_domain(u, fam, om, x, Route::regularized).value;
      const double b = apply_nonlocal_domain(u, fam, om, x, Route::complement_decomposition).value;
      worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
    }
  }
  o.detail << "max relative route gap " << worst << " at 20 points x 2 eps";
  o.require(worst <= 1e-8, "<= 1e-8 relative");
}

void criterion_energy_identity(Outcome& o) {
  const DensitySpec d = bump_density(1);
  const Domain om = Domain::interval(0.0, 1.0);
  const TestFunction u = make_compatible_function(om, momentum_matrix(d).m, "cos_k", {{"k", 1}});
  bool nonneg = true;
  double gap02 = 1.0;
  for (double eps : {0.4, 0.2, 0.1}) {
    const EnergyCheck e = energy_identity_check(u, KernelFamily(d, eps), om);
    nonneg = nonneg && e.rhs >= 0.0;
    if (eps == 0.2) gap02 = e.gap;
    o.detail << "eps " << eps << ": gap " << e.gap << ", rhs " << e.rhs << "; ";
  }
  o.require(gap02 <= 1e-4, "gap <= 1e-4 at eps 0.2");
  o.require(nonneg, "right side nonnegative");
}

void criterion_dirac_family(Outcome& o) {
  double mass_gap = 0.0;
  // declared mass 2n of the bump
  for (int n : {1, 2, 3}) {
    const DensitySpec d = bump_density(n);
    for (double eps : {1.0, 0.5, 0.1})
      mass_gap = std::max(mass_gap, std::abs(scaled_mass(KernelFamily(d, eps), config_for(d)).value - 2.0 * n) /
                                        (2.0 * n));
  }
  // 1D fractional against an adaptive Gauss-Kronrod oracle of 2 int_0^inf rho
  const DensitySpec frac = make_fractional_density(1, 0.75, 4.0, 2.0);
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  auto rho = [&](double r) { return frac.eval(make_vec({r})); };
  // r = t^2 on [0, 1] removes the r^{-1/2} endpoint singularity
  auto rho_sq = [&](double t) { return 2.0 * t * rho(t * t); };
  const double oracle = 2.0 * (gk.integrate(rho_sq, 0.0, 1.0, 15, 1e-15) + gk.integrate(rho, 1.0, 4.0, 15, 1e-15) +
                               gk.integrate(rho, 4.0, 6.0, 15, 1e-15));
  for (double eps : {1.0, 0.5, 0.1})
    mass_gap = std::max(mass_gap, std::abs(scaled_mass(KernelFamily(frac, eps), config_for(frac)).value - oracle) /
                                      oracle);
  o.detail << "max relative mass gap " << mass_gap;
  o.require(mass_gap <= 1e-8, "mass preserved within 1e-8");

  bool decreasing = true;
  for (int n : {1, 2}) {
    const auto tails = check_dirac_property(make_fractional_density(n, 0.75, 4.0, 2.0), 0.5, {0.4, 0.2, 0.1});
    o.detail << "; fractional n=" << n << " tails";
    for (std::size_t i = 0; i < tails.size(); ++i) {
      o.detail << " " << tails[i].mass;
      if (i > 0) decreasing = decreasing && tails[i].mass < tails[i - 1].mass;
    }
  }
  o.require(decreasing, "tail mass strictly decreasing");
  bool zero = true;
  for (int n : {1, 2, 3}) {
    const DensitySpec d = bump_density(n);
    for (const TailMass& t : check_dirac_property(d, 0.5, {0.4, 0.2, 0.1})) {
      if (t.epsilon < 0.5 / d.support_radius) zero = zero && t.mass == 0.0;
    }
  }
  o.detail << "; compact bump tails exactly zero: " << (zero ? "yes" : "no");
  o.require(zero, "compact tails exactly 0");
}

// Central differences relative to the sup of the exact derivative over the sample.
double derivative_gap(const TestFunction& u, const Vec& lo, const Vec& hi, int points) {
  std::mt19937_64 rng(21);
  const int n = u.dim;
  double g_sup = 0, h_sup = 0, t_sup = 0, g_err = 0, h_err = 0, t_err = 0;
  for (int s = 0; s < points; ++s) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng);
    const Vec g = u.gradient(x);
    const Mat h = u.hessian(x);
    const auto t = u.third_derivs(x);
    g_sup = std::max(g_sup, g.cwiseAbs().maxCoeff());
    h_sup = std::max(h_sup, max_abs(h));
    for (double v : t) t_sup = std::max(t_sup, std::abs(v));
    for (int k = 0; k < n; ++k) {
      auto at = [&](double step) {
        Vec y = x;
        y(k) += step;
        return y;
      };
      const double dv = (-u.value(at(2e-4)) + 8 * u.value(at(1e-4)) - 8 * u.value(at(-1e-4)) + u.value(at(-2e-4))) /
                        12e-4;
      g_err = std::max(g_err, std::abs(g(k) - dv));
      const Vec dg = (-u.gradient(at(2e-4)) + 8 * u.gradient(at(1e-4)) - 8 * u.gradient(at(-1e-4)) +
                      u.gradient(at(-2e-4))) /
                     12e-4;
      for (int i = 0; i < n; ++i) h_err = std::max(h_err, std::abs(h(i, k) - dg(i)));
      const Mat dh = (-u.hessian(at(2e-4)) + 8 * u.hessian(at(1e-4)) - 8 * u.hessian(at(-1e-4)) +
                      u.hessian(at(-2e-4))) /
                     12e-4;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) t_err = std::max(t_err, std::abs(t[9 * i + 3 * j + k] - dh(i, j)));
    }
  }
  double worst = 0.0;
  if (g_sup > 0) worst = std::max(worst, g_err / g_sup);
  if (h_sup > 0) worst = std::max(worst, h_err / h_sup);
  if (t_sup > 0) worst = std::max(worst, t_err / t_sup);
  return worst;
}

void criterion_derivatives_linearity(Outcome& o) {
  GraphFunction curved;
  curved.amplitude = 0.1;
  Mat h(2, 2);
  h << 2.0, 0.5, 0.5, -1.0;
  const Domain interval = Domain::interval(0.0, 1.0);
  const Domain ell = Domain::ball(zeros(2), 1.0, diag2(0.5, 2.0));
  const Domain half = Domain::half_space_graph(2, curved);
  const Domain half3 = Domain::half_space_graph(3, curved);
  struct Case {
    TestFunction u;
    Vec lo, hi;
  };
  const std::vector<Case> cases = {
      {make_quadratic_function(h, make_vec({0.3, -0.2}), 1.0), make_vec({-2, -2}), make_vec({2, 2})},
      {make_linear_function(make_vec({1.0, 2.0, 3.0})), make_vec({-1, -1, -1}), make_vec({1, 1, 1})},
      {make_bump_function(make_vec({0.1, 0.2}), 0.8), make_vec({-1, -1}), make_vec({1, 1})},
      {make_compatible_function(interval, identity(1), "cos_k", {{"k", 2}}), make_vec({-3}), make_vec({4})},
      {make_recipe_function(1, "sin_k", {{"k", 1}}), make_vec({-3}), make_vec({4})},
      {make_compatible_function(ell, identity(2), "ball_radial"), make_vec({-1.2, -4.2}), make_vec({1.2, 4.2})},
      {make_compatible_function(half, identity(2), "normal_bump"), make_vec({-1.5, -1.5}), make_vec({1.5, 1.5})},
      {make_compatible_function(half3, identity(3), "normal_bump", {{"sigma", 0.7}}),
       make_vec({-0.8, -0.8, -0.8}), make_vec({0.8, 0.8, 0.8})}};
  double fd = 0.0;
  for (const Case& c : cases) fd = std::max(fd, derivative_gap(c.u, c.lo, c.hi, 300));

  const KernelFamily fam(make_fractional_density(2, 0.75), 0.4);
  const TestFunction u = make_bump_function(make_vec({0.1, 0.0}), 1.0);
  Mat h2(2, 2);
  h2 << 1.0, -0.3, -0.3, 0.5;
  const TestFunction v = make_quadratic_function(h2, make_vec({0.2, 0.1}));
  const TestFunction w = combine(1.5, u, -0.7, v);
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-0.8, 0.8);
  double lin = 0.0;
  for (int i = 0; i < 10; ++i) {
    const Vec x = make_vec({dist(rng), dist(rng)});
    const double lu = apply_nonlocal_fullspace(u, fam, x, tight()).value;
    const double lv = apply_nonlocal_fullspace(v, fam, x, tight()).value;
    const double lw = apply_nonlocal_fullspace(w, fam, x, tight()).value;
    lin = std::max(lin, std::abs(lw - (1.5 * lu - 0.7 * lv)) / std::abs(lw));
  }

  double shell = 0.0;
  const std::vector<DensitySpec> kernels = {bump_density(1), bump_density(2), bump_density(3),
                                            make_fractional_density(2, 0.75),
                                            make_anisotropic_density(bump_density(2), diag2(2.0, 0.5))};
  for (const DensitySpec& d : kernels)
    for (double eps : {1.0, 0.1})
      for (double r : {1e-3, 0.05})
        shell = std::max(shell, std::abs(shell_moment(KernelFamily(d, eps), r * eps,
                                                       Vec::LinSpaced(d.dim, 1.0, 3.0)).value));
  o.detail << "derivative FD gap " << fd << ", linearity " << lin << ", shell moments " << shell;
  o.require(fd <= 1e-5, "derivatives <= 1e-5 relative");
  o.require(lin <= 1e-9, "linearity <= 1e-9 relative");
  o.require(shell <= 1e-10, "shell moments <= 1e-10");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"full-space rate", criterion_fullspace_rate},
      {"interval rate and p-dependence", criterion_interval_rate},
      {"half-space rates", criterion_halfspace_rate},
      {"quadratic exactness", criterion_quadratic_exactness},
      {"momentum matrix identities", criterion_momentum_identities},
      {"moment cancellation", criterion_moment_cancellation},
      {"singular kernel well-posedness", criterion_singular_wellposed},
      {"route equivalence", criterion_route_equivalence},
      {"energy identity", criterion_energy_identity},
      {"Dirac family", criterion_dirac_family},
      {"derivative, linearity and evenness suites", criterion_derivatives_linearity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
