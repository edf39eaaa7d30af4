#include "nonloc/quadrature.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <map>
#include <sstream>
#include <memory>
#include <mutex>

namespace nonloc {

void QuadratureConfig::validate() const {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw ParameterError("rel_tol must lie in (0, 1)");
  if (!(abs_tol >= 0.0)) throw ParameterError("abs_tol must be nonnegative");
  if (radial_nodes < 2) throw ParameterError("radial_nodes must be at least 2");
  if (angular_nodes < 2) throw ParameterError("angular_nodes must be at least 2");
  if (!(near_split_factor > 0.0)) throw ParameterError("near_split_factor must be positive");
  if (far_truncation && !(*far_truncation > 0.0))
    throw ParameterError("far_truncation must be positive");
  if (!(singularity_exponent < 2.0)) throw ParameterError("singularity_exponent must be below 2");
  if (radial_panels < 1) throw ParameterError("radial_panels must be at least 1");
  if (!(grading_ratio > 0.0 && grading_ratio < 1.0))
    throw ParameterError("grading_ratio must lie in (0, 1)");
  if (grading_levels < 0) throw ParameterError("grading_levels must be nonnegative");
  if (!(taylor_radius >= 0.0 && std::isfinite(taylor_radius)))
    throw ParameterError("taylor_radius must be finite and non-negative");
  if (max_refinements < 0) throw ParameterError("max_refinements must be nonnegative");
}

std::string convergence_message(double estimate, double tol, int refinements) {
  std::ostringstream os;
  os.precision(3);
  os << "quadrature did not converge: estimate " << estimate << " > tolerance " << tol
     << " after " << refinements << " refinements";
  return os.str();
}

const GaussRule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return *it->second;

  auto rule = std::make_unique<GaussRule>();
  // Boost returns the nonnegative zeros in increasing order.
  const std::vector<double> zeros = boost::math::legendre_p_zeros<double>(n);
  std::vector<double> x, w;
  for (double z : zeros) {
    const double dp = boost::math::legendre_p_prime(n, z);
    x.push_back(z);
    w.push_back(2.0 / ((1.0 - z * z) * dp * dp));
  }
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] == 0.0) continue;
    rule->nodes.push_back(-x[i]);
    rule->weights.push_back(w[i]);
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    rule->nodes.push_back(x[i]);
    rule->weights.push_back(w[i]);
  }
  const GaussRule& ref = *rule;
  cache.emplace(n, std::move(rule));
  return ref;
}

void segment_edges(double a, double b, bool singular_start, const RadialScheme& scheme,
                   std::vector<double>& edges) {
  edges.clear();
  const int panels = std::max(1, scheme.panels);
  const double len = b - a;
  for (int k = 0; k <= panels; ++k) edges.push_back(a + len * k / panels);
  if (singular_start) {
    double w = len / panels;
    for (int j = 0; j < scheme.levels; ++j) {
      w *= scheme.ratio;
      edges.push_back(a + w);
    }
  } else if (a > 0.0) {
    for (double e = a / scheme.ratio; e < b; e /= scheme.ratio) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  const double tiny = 1e-13 * std::max(std::abs(a), std::abs(b));
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [tiny](double p, double q) { return q - p <= tiny; }),
              edges.end());
  edges.back() = b;
}

namespace {

DirectionSet build_directions(int dim, int n) {
  DirectionSet ds;
  ds.dim = dim;
  if (dim == 1) {
    ds.dirs = {make_vec({1.0}), make_vec({-1.0})};
    ds.weights = {1.0, 1.0};
    ds.coarse_index = {0, 1};
    ds.coarse_weights = {1.0, 1.0};
    return ds;
  }
  if (dim == 2) {
    const int count = std::max(4, (n + 3) / 4 * 4);
    const double h = 2.0 * M_PI / count;
    // Unshifted nodes: a half-step offset would make the N/2 subset alias
    // exactly like the full rule on integrands even in the angle.
    for (int k = 0; k < count; ++k) {
      const double t = h * k;
      ds.dirs.push_back(make_vec({std::cos(t), std::sin(t)}));
      ds.weights.push_back(h);
    }
    // Exact antipodes rather than rounded cos/sin of shifted angles.
    for (int k = 0; k < count / 2; ++k) ds.dirs[k + count / 2] = -ds.dirs[k];
    for (int k = 0; k < count; k += 2) {
      ds.coarse_index.push_back(k);
      ds.coarse_weights.push_back(2.0 * h);
    }
    return ds;
  }
  if (dim == 3) {
    auto product_rule = [](int n_mu, int n_phi, std::vector<Vec>& dirs,
                           std::vector<double>& weights) {
      const GaussRule& g = gauss_legendre(n_mu);
      const double h = 2.0 * M_PI / n_phi;
      std::vector<Vec> upper;
      std::vector<double> upper_w;
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double mu = g.nodes[i];
        if (mu <= 0.0) continue;
        const double s = std::sqrt(1.0 - mu * mu);
        for (int j = 0; j < n_phi; ++j) {
          const double phi = h * (j + 0.5);
          upper.push_back(make_vec({s * std::cos(phi), s * std::sin(phi), mu}));
          upper_w.push_back(g.weights[i] * h);
        }
      }
      dirs = upper;
      weights = upper_w;
      for (std::size_t k = 0; k < upper.size(); ++k) {
        dirs.push_back(-upper[k]);
        weights.push_back(upper_w[k]);
      }
    };
    const int n_mu = std::max(2, (n / 2 + 1) / 2 * 2);
    const int n_phi = std::max(4, (n + 1) / 2 * 2);
    product_rule(n_mu, n_phi, ds.dirs, ds.weights);
    product_rule(std::max(2, n_mu / 2 / 2 * 2), std::max(4, n_phi / 2), ds.coarse_dirs,
                 ds.coarse_weights);
    return ds;
  }
  throw ParameterError("dimension must be 1, 2 or 3");
}

}  // namespace

const DirectionSet& direction_set(int dim, int angular_nodes) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<DirectionSet>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  const auto key = std::make_pair(dim, angular_nodes);
  auto it = cache.find(key);
  if (it != cache.end()) return *it->second;
  auto ds = std::make_unique<DirectionSet>(build_directions(dim, angular_nodes));
  const DirectionSet& ref = *ds;
  cache.emplace(key, std::move(ds));
  return ref;
}

void collect_breaks(std::vector<double>& radii, double extent) {
  radii.push_back(0.0);
  radii.push_back(extent);
  std::erase_if(radii, [extent](double r) { return !(r >= 0.0 && r <= extent); });
  std::sort(radii.begin(), radii.end());
  const double tiny = 1e-13 * extent;
  radii.erase(std::unique(radii.begin(), radii.end(),
                          [tiny](double p, double q) { return q - p <= tiny; }),
              radii.end());
  radii.back() = extent;
}

namespace {

inline double radial_power(double r, int dim) {
  switch (dim) {
    case 1: return 1.0;
    case 2: return r;
    default: return r * r;
  }
}

}  // namespace

QuadResult integrate_singular(int dim, const std::function<double(const Vec&)>& f,
                              const QuadratureConfig& cfg, const RayGeometry& geometry) {
  cfg.validate();
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must be 1, 2 or 3");
  auto ray = [&](const Vec& dir, const RadialScheme& scheme, bool need_coarse) {
    double extent = kInf;
    if (geometry.extent) extent = geometry.extent(dir);
    if (cfg.far_truncation) extent = std::min(extent, *cfg.far_truncation);
    if (!std::isfinite(extent))
      throw ParameterError("far truncation 'support' requires a finite support extent");
    TwoLevel acc;
    if (!(extent > 0.0)) return acc;
    std::vector<double> radii{cfg.near_split_factor * geometry.scale};
    if (geometry.breaks) geometry.breaks(dir, radii);
    collect_breaks(radii, extent);
    auto g = [&](double r) { return f(r * dir) * radial_power(r, dim); };
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
      acc += integrate_segment(g, radii[i], radii[i + 1], i == 0, scheme, need_coarse);
    return acc;
  };
  return integrate_over_directions(dim, cfg, ray);
}

QuadResult integrate_annulus(int dim, const std::function<double(const Vec&)>& f, double r0,
                             double r1, const QuadratureConfig& cfg,
                             const RayGeometry& geometry) {
  cfg.validate();
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must be 1, 2 or 3");
  if (!(r0 >= 0.0) || !(r1 > r0)) throw ParameterError("annulus radii must satisfy 0 <= r0 < r1");
  auto ray = [&](const Vec& dir, const RadialScheme& scheme, bool need_coarse) {
    double extent = r1;
    if (geometry.extent) extent = std::min(extent, geometry.extent(dir));
    if (cfg.far_truncation) extent = std::min(extent, *cfg.far_truncation);
    if (!std::isfinite(extent))
      throw ParameterError("far truncation 'support' requires a finite support extent");
    TwoLevel acc;
    if (!(extent > r0)) return acc;
    std::vector<double> radii{r0, cfg.near_split_factor * geometry.scale};
    if (geometry.breaks) geometry.breaks(dir, radii);
    collect_breaks(radii, extent);
    std::erase_if(radii, [r0](double r) { return r < r0; });
    if (radii.front() > r0) radii.insert(radii.begin(), r0);
    auto g = [&](double r) { return f(r * dir) * radial_power(r, dim); };
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
      const bool singular = i == 0 && r0 == 0.0;
      acc += integrate_segment(g, radii[i], radii[i + 1], singular, scheme, need_coarse);
    }
    return acc;
  };
  return integrate_over_directions(dim, cfg, ray);
}

std::vector<double> crossing_change_angles(const Region& region, const Vec& origin,
                                           const std::function<double(const Vec&)>& extent,
                                           int scan) {
  if (region.dim() != 2) throw ParameterError("crossing_change_angles is two-dimensional");
  constexpr double kTwoPi = 6.283185307179586;
  std::vector<double> scratch;
  auto count = [&](double t) {
    const Vec dir = make_vec({std::cos(t), std::sin(t)});
    scratch.clear();
    region.ray_crossings(origin, dir, extent(dir), scratch);
    return scratch.size();
  };
  std::vector<double> out;
  // Bisects a bracket with differing counts, then searches both sides again:
  // a scan step can hide several changes (a tangency next to an extent exit).
  std::function<void(double, std::size_t, double, std::size_t, int)> locate =
      [&](double lo, std::size_t clo, double hi, std::size_t chi, int depth) {
        if (clo == chi || depth > 8) return;
        double a = lo, b = hi;
        std::size_t cb = chi;
        while (b - a > 1e-13) {
          const double mid = 0.5 * (a + b);
          const std::size_t cm = count(mid);
          if (cm == clo) {
            a = mid;
          } else {
            b = mid;
            cb = cm;
          }
        }
        out.push_back(0.5 * (a + b));
        if (cb != chi) locate(b, cb, hi, chi, depth + 1);
      };
  double t0 = 0.0;
  std::size_t c0 = count(t0);
  for (int k = 1; k <= scan; ++k) {
    const double t1 = kTwoPi * k / scan;
    const std::size_t c1 = count(t1);
    locate(t0, c0, t1, c1, 0);
    t0 = t1;
    c0 = c1;
  }
  return out;
}

QuadResult integrate_over_region(const std::function<double(const Vec&)>& f,
                                 const RegionSpec& spec, const QuadratureConfig& cfg) {
  cfg.validate();
  if (!spec.region) throw ParameterError("region is required");
  const int dim = spec.region->dim();
  if (spec.center.size() != dim) throw ParameterError("center dimension mismatch");
  if (!(spec.radius > 0.0)) throw ParameterError("radius must be positive");
  auto ray = [&](const Vec& dir, const RadialScheme& scheme, bool need_coarse) {
    std::vector<double> radii;
    spec.region->ray_crossings(spec.center, dir, spec.radius, radii);
    collect_breaks(radii, spec.radius);
    auto g = [&](double r) { return f(spec.center + r * dir) * radial_power(r, dim); };
    TwoLevel acc;
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
      const double mid = 0.5 * (radii[i] + radii[i + 1]);
      const bool inside = spec.region->contains(spec.center + mid * dir);
      if (inside == spec.complement) continue;
      acc += integrate_segment(g, radii[i], radii[i + 1], i == 0, scheme, need_coarse);
    }
    return acc;
  };
  if (dim == 2)
    return integrate_over_angle_panels(
        cfg, ray,
        crossing_change_angles(*spec.region, spec.center, [&](const Vec&) { return spec.radius; }));
  return integrate_over_directions(dim, cfg, ray);
}

}  // namespace nonloc
