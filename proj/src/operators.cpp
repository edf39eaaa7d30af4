#include "nonloc/operators.hpp"

#include "nonloc/errors.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <iomanip>
#include <sstream>

namespace nonloc {

std::string to_string(Route r) {
  switch (r) {
    case Route::regularized: return "regularized";
    case Route::pv_limit: return "pv_limit";
    case Route::complement_decomposition: return "complement_decomposition";
  }
  return "unknown";
}

Route route_from_string(const std::string& name) {
  if (name == "regularized") return Route::regularized;
  if (name == "pv_limit") return Route::pv_limit;
  if (name == "complement_decomposition") return Route::complement_decomposition;
  throw ParameterError("unknown route '" + name + "'");
}

namespace {

using PointFn = std::function<Scaled(const Vec&)>;

double radial_power(double r, int dim) {
  return dim == 1 ? 1.0 : dim == 2 ? r : r * r;
}

// Integral over rays from x of `inside` on the part of the ray in the domain
// and `outside` on the rest, restricted to |z| >= r_min and to the kernel
// support. A null domain means R^n (everything is inside). `r_extra` is an
// additional radial break (the Taylor core edge).
QuadResult integrate_rays(const KernelFamily& family, const Domain* domain, const Vec& x, double r_min,
                          const QuadratureConfig& base, const PointFn& inside, const PointFn& outside,
                          double r_extra = 0.0) {
  QuadratureConfig cfg = config_for(family.density(), base);
  cfg.validate();
  const int dim = family.dim();
  const RayGeometry geo = family.geometry();
  const bool split = domain != nullptr && domain->has_boundary();
  auto ray = [&](const Vec& dir, const RadialScheme& scheme, bool need_coarse) {
    double extent = geo.extent ? geo.extent(dir) : kInf;
    if (cfg.far_truncation) extent = std::min(extent, *cfg.far_truncation);
    if (!std::isfinite(extent))
      throw ParameterError("far truncation 'support' requires a finite support extent");
    TwoLevel acc;
    if (!(extent > r_min)) return acc;
    std::vector<double> radii{r_min, cfg.near_split_factor * geo.scale};
    if (r_extra > 0.0) radii.push_back(r_extra);
    if (geo.breaks) geo.breaks(dir, radii);
    if (split) domain->ray_crossings(x, dir, extent, radii);
    collect_breaks(radii, extent);
    std::erase_if(radii, [r_min](double r) { return r < r_min; });
    if (radii.front() > r_min) radii.insert(radii.begin(), r_min);
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
      const double a = radii[i], b = radii[i + 1];
      const bool in = !split || domain->contains(x + (0.5 * (a + b)) * dir);
      const PointFn& f = in ? inside : outside;
      if (!f) continue;
      auto g = [&](double r) {
        const auto [v, mag] = f(r * dir);
        const double w = radial_power(r, dim);
        return Scaled{v * w, mag * w};
      };
      acc += integrate_segment(g, a, b, i == 0 && r_min == 0.0, scheme, need_coarse);
    }
    return acc;
  };
  if (split && dim == 2) {
    auto extent = [&](const Vec& dir) {
      double e = geo.extent ? geo.extent(dir) : kInf;
      if (cfg.far_truncation) e = std::min(e, *cfg.far_truncation);
      return e;
    };
    return integrate_over_angle_panels(cfg, ray, crossing_change_angles(*domain, x, extent));
  }
  return integrate_over_directions(dim, cfg, ray);
}

// Regularized integrand J(z) (u(x) - u(x+z) + g.z) with a third-order Taylor
// replacement for |z| < r_core, where the subtraction cancels catastrophically.
struct Regularized {
  const TestFunction* u;
  const KernelFamily* family;
  Vec x;
  int dim;
  double u0 = 0.0, r_core = 0.0;
  double noise_mag = 0.0;  // rounding scale of u evaluations, measured
  Vec g;
  Jet jet;

  Regularized(const TestFunction& fn, const KernelFamily& fam, const Vec& at)
      : u(&fn), family(&fam), x(at), dim(fam.dim()) {
    jet = fn.jet(at);
    u0 = jet.v;
    g = Vec(dim);
    for (int i = 0; i < dim; ++i) g(i) = jet.g[i];
  }

  double taylor(const Vec& z) const {
    double quad = 0.0, cubic = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        quad += jet.hess(i, j) * z(i) * z(j);
        for (int k = 0; k < dim; ++k) cubic += jet.third(i, j, k) * z(i) * z(j) * z(k);
      }
    return -0.5 * quad - cubic / 6.0;
  }

  Scaled direct(const Vec& z) const {
    const double uz = u->value(x + z), gz = g.dot(z);
    return {u0 - uz + gz, std::abs(u0) + std::abs(uz) + std::abs(gz) + noise_mag};
  }

  // Largest radius on a doubling ladder from r_start (capped at r_max) where
  // the Taylor bracket matches the direct one to rel_tol, or to rounding.
  void choose_core(double r_start, double r_max, double rel_tol) {
    std::vector<Vec> probes;
    for (int i = 0; i < dim; ++i) {
      probes.push_back(Vec::Unit(dim, i));
      probes.push_back(-Vec::Unit(dim, i));
    }
    if (dim > 1) {
      Vec a = Vec::Ones(dim), b = Vec::Ones(dim);
      for (int i = 1; i < dim; i += 2) b(i) = -1.0;
      for (const Vec& v : {a, b}) {
        probes.push_back(v.normalized());
        probes.push_back(-v.normalized());
      }
    }
    // At a radius far below r_start the Taylor remainder is negligible and
    // the bracket mismatch is the rounding of u itself.
    for (const Vec& p : probes) {
      const Vec z = 1e-3 * r_start * p;
      noise_mag = std::max(noise_mag, std::abs(direct(z).first - taylor(z)) / 2.22e-16);
    }
    r_core = std::min(r_start, r_max);
    for (double r = r_core; r <= r_max; r *= 2.0) {
      for (const Vec& p : probes) {
        const Vec z = r * p;
        const double t = taylor(z);
        const auto [v, mag] = direct(z);
        if (std::abs(v - t) > std::max(rel_tol * std::abs(t), 16.0 * 2.22e-16 * mag)) return;
      }
      r_core = r;
    }
  }

  Scaled bracket(const Vec& z) const {
    if (z.norm() < r_core) {
      const double t = taylor(z);
      return {t, std::abs(t)};
    }
    return direct(z);
  }

  Scaled operator()(const Vec& z) const {
    const double k = family->kernel(z);
    const auto [b, mag] = bracket(z);
    return {k * b, k * mag};
  }
};

void check_point(const TestFunction& u, const KernelFamily& family, const Vec& x) {
  if (x.size() != family.dim() || u.dim != family.dim())
    throw ParameterError("point, test function and kernel dimensions differ");
}

double extrapolate(const double* r, const double* v, double* exponent) {
  const double d1 = v[0] - v[1], d2 = v[1] - v[2];
  const double scale = std::max({std::abs(v[0]), std::abs(v[1]), std::abs(v[2]), 1e-300});
  if (std::abs(d2) <= 1e-15 * scale || d1 * d2 <= 0.0) {
    *exponent = 0.0;
    return v[2];
  }
  const double ratio = d1 / d2;
  auto phi = [&](double p) {
    return (std::pow(r[0], p) - std::pow(r[1], p)) / (std::pow(r[1], p) - std::pow(r[2], p)) - ratio;
  };
  double lo = 1e-3, hi = 12.0;
  double p;
  if (phi(lo) >= 0.0) {
    p = lo;
  } else if (phi(hi) <= 0.0) {
    p = hi;
  } else {
    boost::uintmax_t iters = 200;
    const auto root = boost::math::tools::toms748_solve(phi, lo, hi, boost::math::tools::eps_tolerance<double>(50),
                                                        iters);
    p = 0.5 * (root.first + root.second);
  }
  *exponent = p;
  const double c = d2 / (std::pow(r[1], p) - std::pow(r[2], p));
  return v[2] - c * std::pow(r[2], p);
}

}  // namespace

QuadResult apply_nonlocal_fullspace(const TestFunction& u, const KernelFamily& family, const Vec& x,
                                    const QuadratureConfig& cfg) {
  check_point(u, family, x);
  Regularized reg(u, family, x);
  reg.choose_core(cfg.taylor_radius, cfg.near_split_factor * family.epsilon(), cfg.rel_tol);
  return integrate_rays(family, nullptr, x, 0.0, cfg, std::cref(reg), nullptr, reg.r_core);
}

static PvResult apply_nonlocal_pv_on(const TestFunction& u, const KernelFamily& family,
                                     const Domain* domain, const Vec& x,
                                     const std::vector<double>& radii,
                                     const QuadratureConfig& cfg) {
  check_point(u, family, x);
  if (radii.empty()) throw ParameterError("at least one truncation radius is required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw ParameterError("truncation radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw ParameterError("truncation radii must decrease strictly");
  }
  const double u0 = u.value(x);
  const PointFn f = [&](const Vec& z) {
    const double k = family.kernel(z), uz = u.value(x + z);
    return Scaled{k * (u0 - uz), k * (std::abs(u0) + std::abs(uz))};
  };
  PvResult out;
  out.radii = radii;
  for (double r : radii) {
    const QuadResult q = integrate_rays(family, domain, x, r, cfg, f, nullptr);
    out.values.push_back(q.value);
    out.error_estimates.push_back(q.error_estimate);
  }
  const std::size_t n = radii.size();
  // Cauchy check: increments per unit of log r must shrink, up to quadrature noise.
  for (std::size_t k = 2; k < n; ++k) {
    const double prev = std::abs(out.values[k - 1] - out.values[k - 2]) / std::log(radii[k - 2] / radii[k - 1]);
    const double cur = std::abs(out.values[k] - out.values[k - 1]) / std::log(radii[k - 1] / radii[k]);
    const double noise = 2.0 * (out.error_estimates[k] + out.error_estimates[k - 1] + out.error_estimates[k - 2]) /
                         std::log(radii[k - 1] / radii[k]);
    if (cur > prev * (1.0 + 1e-9) + noise) {
      std::ostringstream msg;
      msg << std::setprecision(3) << "principal value sequence is not Cauchy: increment " << cur << " after "
          << prev << " per unit log r";
      throw CertificationError(msg.str());
    }
  }
  if (n < 3) {
    out.limit = out.values.back();
    out.limit_error = n == 2 ? std::abs(out.values[1] - out.values[0]) : kInf;
    return out;
  }
  double p = 0.0;
  out.limit = extrapolate(&radii[n - 3], &out.values[n - 3], &p);
  out.exponent = p;
  if (n >= 4) {
    double p_prev = 0.0;
    const double prev = extrapolate(&radii[n - 4], &out.values[n - 4], &p_prev);
    out.limit_error = std::abs(out.limit - prev) + out.error_estimates.back();
  } else {
    out.limit_error = std::abs(out.limit - out.values.back()) + out.error_estimates.back();
  }
  return out;
}

PvResult apply_nonlocal_pv(const TestFunction& u, const KernelFamily& family, const Vec& x,
                           const std::vector<double>& radii, const QuadratureConfig& cfg) {
  return apply_nonlocal_pv_on(u, family, nullptr, x, radii, cfg);
}

QuadResult apply_nonlocal_domain(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                 const Vec& x, Route route, const QuadratureConfig& cfg) {
  check_point(u, family, x);
  if (domain.dim() != family.dim()) throw ParameterError("domain and kernel dimensions differ");
  const double d = domain.boundary_distance(x);
  if (!(d > 0.0)) {
    std::ostringstream msg;
    msg << std::setprecision(3) << "point not interior: boundary distance " << d;
    throw ContractError(msg.str());
  }
  if (!u.global) throw UnsupportedError("test function has no global extension");

  if (route == Route::pv_limit) {
    std::vector<double> radii;
    for (int k = 2; k <= 13; ++k) radii.push_back(std::min(d, family.epsilon()) * std::ldexp(1.0, -k));
    const PvResult pv = apply_nonlocal_pv_on(u, family, &domain, x, radii, cfg);
    return QuadResult{pv.limit, pv.limit_error, 0};
  }

  if (!domain.has_boundary()) return apply_nonlocal_fullspace(u, family, x, cfg);

  Regularized reg(u, family, x);
  reg.choose_core(cfg.taylor_radius, std::min(cfg.near_split_factor * family.epsilon(), 0.5 * d), cfg.rel_tol);
  const double core = reg.r_core;
  if (route == Route::complement_decomposition) {
    const QuadResult full = integrate_rays(family, nullptr, x, 0.0, cfg, std::cref(reg), nullptr, core);
    const double u0 = reg.u0;
    const PointFn comp = [&](const Vec& z) {
      const double k = family.kernel(z), uz = u.value(x + z);
      return Scaled{k * (u0 - uz), k * (std::abs(u0) + std::abs(uz))};
    };
    const QuadResult c = integrate_rays(family, &domain, x, 0.0, cfg, nullptr, comp);
    return QuadResult{full.value - c.value, full.error_estimate + c.error_estimate,
                      std::max(full.refinements, c.refinements)};
  }
  const Vec g = reg.g;
  const PointFn grad_term = [&](const Vec& z) {
    const double v = family.kernel(z) * g.dot(z);
    return Scaled{v, std::abs(v)};
  };
  return integrate_rays(family, &domain, x, 0.0, cfg, std::cref(reg), grad_term, core);
}

double apply_local(const TestFunction& u, const Mat& m, const Vec& x) {
  if (m.rows() != u.dim || m.cols() != u.dim) throw ParameterError("momentum matrix must be n x n");
  const Mat h = u.hessian(x);
  return -(m.cwiseProduct(h)).sum();
}

Cubature domain_cubature(const Domain& domain, int panels, int nodes) {
  if (!domain.bounded()) throw UnsupportedError("cubature needs a bounded domain");
  if (panels < 1 || nodes < 1) throw ParameterError("cubature needs positive panel and node counts");
  const GaussRule& gl = gauss_legendre(nodes);
  // Composite Gauss-Legendre points of (a, b).
  auto composite = [&](double a, double b, std::vector<double>& pts, std::vector<double>& wts) {
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p)
      for (int i = 0; i < nodes; ++i) {
        pts.push_back(a + h * (p + 0.5 * (gl.nodes[i] + 1.0)));
        wts.push_back(0.5 * h * gl.weights[i]);
      }
  };
  Cubature c;
  const int n = domain.dim();
  if (n == 1) {
    const auto box = domain.bounding_box();
    std::vector<double> pts, wts;
    composite(box.first(0), box.second(0), pts, wts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      c.points.push_back(make_vec({pts[i]}));
      c.weights.push_back(wts[i]);
    }
    return c;
  }
  const Mat map = domain.radius() * domain.shape();
  const double jac = std::abs(map.determinant());
  std::vector<double> rho, wrho;
  composite(0.0, 1.0, rho, wrho);
  if (n == 2) {
    const int n_theta = 4 * panels * nodes;
    for (std::size_t i = 0; i < rho.size(); ++i)
      for (int k = 0; k < n_theta; ++k) {
        const double t = 2.0 * M_PI * (k + 0.5) / n_theta;
        c.points.push_back(domain.center() + map * make_vec({rho[i] * std::cos(t), rho[i] * std::sin(t)}));
        c.weights.push_back(jac * rho[i] * wrho[i] * 2.0 * M_PI / n_theta);
      }
    return c;
  }
  std::vector<double> mu, wmu;
  {
    const double h = 2.0 / panels;
    for (int p = 0; p < panels; ++p)
      for (int i = 0; i < nodes; ++i) {
        mu.push_back(-1.0 + h * (p + 0.5 * (gl.nodes[i] + 1.0)));
        wmu.push_back(0.5 * h * gl.weights[i]);
      }
  }
  const int n_phi = 2 * panels * nodes;
  for (std::size_t i = 0; i < rho.size(); ++i)
    for (std::size_t j = 0; j < mu.size(); ++j)
      for (int k = 0; k < n_phi; ++k) {
        const double ph = 2.0 * M_PI * (k + 0.5) / n_phi, s = std::sqrt(1.0 - mu[j] * mu[j]);
        const Vec unit = make_vec({s * std::cos(ph), s * std::sin(ph), mu[j]});
        c.points.push_back(domain.center() + map * (rho[i] * unit));
        c.weights.push_back(jac * rho[i] * rho[i] * wrho[i] * wmu[j] * 2.0 * M_PI / n_phi);
      }
  return c;
}

EnergyCheck energy_identity_check(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                  int panels, const QuadratureConfig& cfg) {
  if (!domain.bounded()) throw ContractError("energy identity needs a bounded domain");
  const Cubature cub = domain_cubature(domain, panels);
  EnergyCheck e;
  e.points = static_cast<int>(cub.points.size());
  for (std::size_t i = 0; i < cub.points.size(); ++i) {
    const Vec& x = cub.points[i];
    const double ux = u.value(x);
    const double lu = apply_nonlocal_domain(u, family, domain, x, Route::complement_decomposition, cfg).value;
    e.lhs += cub.weights[i] * lu * ux;
    const PointFn sq = [&](const Vec& z) {
      const double k = family.kernel(z), uz = u.value(x + z), diff = ux - uz;
      return Scaled{k * diff * diff, k * (std::abs(ux) + std::abs(uz)) * std::abs(diff)};
    };
    e.rhs += cub.weights[i] * 0.5 * integrate_rays(family, &domain, x, 0.0, cfg, sq, nullptr).value;
  }
  const double scale = std::max(std::abs(e.lhs), std::abs(e.rhs));
  e.gap = scale == 0.0 ? 0.0 : std::abs(e.lhs - e.rhs) / std::abs(e.rhs == 0.0 ? scale : e.rhs);
  return e;
}

QuadResult shell_moment(const KernelFamily& family, double r, const Vec& v, const QuadratureConfig& cfg) {
  if (!(r > 0.0)) throw ParameterError("shell radius must be positive");
  if (v.size() != family.dim()) throw ParameterError("vector dimension mismatch");
  const PointFn f = [&](const Vec& z) {
    const double k = family.kernel(z);
    return Scaled{k * v.dot(z), k * v.norm() * z.norm()};
  };
  return integrate_rays(family, nullptr, zeros(family.dim()), r, cfg, f, nullptr);
}

nlohmann::json to_json(const PvResult& r) {
  return {{"radii", r.radii},   {"values", r.values},           {"error_estimates", r.error_estimates},
          {"limit", r.limit},   {"limit_error", r.limit_error}, {"exponent", r.exponent}};
}

nlohmann::json to_json(const EnergyCheck& e) {
  return {{"lhs", e.lhs}, {"rhs", e.rhs}, {"gap", e.gap}, {"points", e.points}};
}

}  // namespace nonloc
