#pragma once

// Shared integration engine for integrands with a rho/|z|^2-type singularity.
//
// Everything is organized along rays from a center point: the angular rule
// picks directions, and each ray is split into segments at kernel and region
// breakpoints. The segment touching the center is graded geometrically toward
// r = 0 and its innermost panel uses the substitution r = w t^{1/(2-alpha)},
// which turns an r^{1-alpha} profile into a bounded integrand. Every result
// carries a two-level error estimate: q vs 2q Gauss nodes per radial panel,
// and N/2 vs N directions.

#include "nonloc/errors.hpp"
#include "nonloc/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace nonloc {

class Region;

struct QuadratureConfig {
  double near_split_factor = 4.0;      // near/far split at this multiple of the length scale
  int radial_nodes = 8;                // Gauss-Legendre nodes per panel (coarse level)
  int angular_nodes = 32;              // directions per angular dimension (fine level)
  std::optional<double> far_truncation;  // absolute radius; empty means "support"
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double singularity_exponent = 1.0;   // alpha of the radial flattening
  int radial_panels = 4;               // uniform panels per ray segment
  double grading_ratio = 0.5;          // geometric grading toward singular points
  int grading_levels = 8;
  double taylor_radius = 1e-6;         // smallest Taylor core radius
  int max_refinements = 12;

  void validate() const;
};

struct QuadResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int refinements = 0;
};

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

// Cached, thread-safe.
const GaussRule& gauss_legendre(int n);

// Coarse/fine pair for the Richardson-style estimate.
struct TwoLevel {
  double coarse = 0.0;
  double fine = 0.0;
  double fine_abs = 0.0;

  TwoLevel& operator+=(const TwoLevel& o) {
    coarse += o.coarse;
    fine += o.fine;
    fine_abs += o.fine_abs;
    return *this;
  }
  TwoLevel& operator-=(const TwoLevel& o) {
    coarse -= o.coarse;
    fine -= o.fine;
    fine_abs += o.fine_abs;
    return *this;
  }
};

struct RadialScheme {
  int nodes = 8;
  int panels = 4;
  double ratio = 0.5;
  int levels = 8;
  double alpha = 1.0;
};

// Panel edges of [a, b]. A singular start (a == 0) is graded toward 0; a
// positive start is graded geometrically away from it, which resolves 1/r^k
// near-singularities of a ray that begins close to the singular point.
void segment_edges(double a, double b, bool singular_start, const RadialScheme& scheme,
                   std::vector<double>& edges);

// An integrand returns either its value or a (value, magnitude) pair. The
// magnitude bounds the terms that cancel inside the value and sets the
// rounding floor of the convergence test.
using Scaled = std::pair<double, double>;

// Estimates below this multiple of the integrated magnitude are rounding noise.
inline constexpr double kRoundingFloor = 4.0 * 2.22e-16;

template <class G>
Scaled sample(const G& g, double r) {
  const auto v = g(r);
  if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Scaled>)
    return v;
  else
    return {v, std::abs(v)};
}

template <class G>
TwoLevel integrate_panels(const G& g, std::span<const double> edges, bool substitute_first,
                          const RadialScheme& scheme, bool need_coarse = true) {
  const GaussRule& coarse = gauss_legendre(scheme.nodes);
  const GaussRule& fine = gauss_legendre(2 * scheme.nodes);
  TwoLevel out;
  const double beta = 1.0 / (2.0 - std::clamp(scheme.alpha, 0.0, 1.95));
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double p0 = edges[k], p1 = edges[k + 1];
    if (!(p1 > p0)) continue;
    if (k == 0 && substitute_first) {
      // r = p1 * t^beta, t in [0, 1]
      auto eval = [&](const GaussRule& rule, double& acc, double* abs_acc) {
        for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
          const double t = 0.5 * (rule.nodes[i] + 1.0);
          const double tb = std::pow(t, beta);
          const double r = p1 * tb;
          const double jac = p1 * beta * tb / t * 0.5;
          const auto [f, mag] = sample(g, r);
          acc += f * jac * rule.weights[i];
          if (abs_acc) *abs_acc += mag * jac * rule.weights[i];
        }
      };
      eval(fine, out.fine, &out.fine_abs);
      if (need_coarse) eval(coarse, out.coarse, nullptr);
    } else {
      const double mid = 0.5 * (p0 + p1), half = 0.5 * (p1 - p0);
      for (std::size_t i = 0; i < fine.nodes.size(); ++i) {
        const auto [f, mag] = sample(g, mid + half * fine.nodes[i]);
        out.fine += f * half * fine.weights[i];
        out.fine_abs += mag * half * fine.weights[i];
      }
      if (need_coarse)
        for (std::size_t i = 0; i < coarse.nodes.size(); ++i)
          out.coarse += sample(g, mid + half * coarse.nodes[i]).first * half * coarse.weights[i];
    }
  }
  if (!need_coarse) out.coarse = out.fine;
  return out;
}

template <class G>
TwoLevel integrate_segment(const G& g, double a, double b, bool singular_start,
                           const RadialScheme& scheme, bool need_coarse = true) {
  std::vector<double> local;
  local.reserve(32);
  segment_edges(a, b, singular_start, scheme, local);
  return integrate_panels(g, std::span<const double>(local), singular_start, scheme, need_coarse);
}

// Direction rules on S^{n-1}. The fine rule is antipodally ordered:
// dirs[k + N/2] == -dirs[k]. For n <= 2 the coarse rule is a subset of the
// fine one (coarse_index); for n = 3 it has its own directions.
struct DirectionSet {
  int dim = 0;
  std::vector<Vec> dirs;
  std::vector<double> weights;
  std::vector<int> coarse_index;
  std::vector<Vec> coarse_dirs;
  std::vector<double> coarse_weights;
};

const DirectionSet& direction_set(int dim, int angular_nodes);

std::string convergence_message(double estimate, double tol, int refinements);

// Angular driver. `ray(dir, scheme, need_coarse)` returns the two-level radial
// integral along `dir`. Radial and angular resolution are refined
// independently until the estimate meets the tolerance.
template <class RayFn>
QuadResult integrate_over_directions(int dim, const QuadratureConfig& cfg, RayFn&& ray,
                                     int angular_hint = 0) {
  int kr = 0, ka = 0;
  for (int attempt = 0;; ++attempt) {
    RadialScheme scheme{cfg.radial_nodes, cfg.radial_panels << kr, cfg.grading_ratio,
                        cfg.grading_levels, cfg.singularity_exponent};
    const int n_ang = std::max(cfg.angular_nodes, angular_hint) << ka;
    const DirectionSet& ds = direction_set(dim, n_ang);

    const std::size_t nd = ds.dirs.size();
    std::vector<TwoLevel> rays(nd);
    std::vector<char> coarse_needed(nd, 0);
    for (int idx : ds.coarse_index) coarse_needed[idx] = 1;

    double value = 0.0, magnitude = 0.0;
    for (std::size_t k = 0; k < nd; ++k) {
      rays[k] = ray(ds.dirs[k], scheme, coarse_needed[k] != 0);
      value += ds.weights[k] * rays[k].fine;
      magnitude += ds.weights[k] * rays[k].fine_abs;
    }

    double radial_est = 0.0, coarse_value = 0.0;
    if (!ds.coarse_index.empty()) {
      for (std::size_t j = 0; j < ds.coarse_index.size(); ++j) {
        const TwoLevel& r = rays[ds.coarse_index[j]];
        coarse_value += ds.coarse_weights[j] * r.fine;
        radial_est += ds.coarse_weights[j] * (r.fine - r.coarse);
      }
    } else {
      for (std::size_t j = 0; j < ds.coarse_dirs.size(); ++j) {
        const TwoLevel r = ray(ds.coarse_dirs[j], scheme, true);
        coarse_value += ds.coarse_weights[j] * r.fine;
        radial_est += ds.coarse_weights[j] * (r.fine - r.coarse);
      }
    }
    radial_est = std::abs(radial_est);
    const double angular_est = std::abs(value - coarse_value);
    const double estimate = radial_est + angular_est;
    const double tol =
        std::max({cfg.rel_tol * std::abs(value), cfg.abs_tol, kRoundingFloor * magnitude});
    if (estimate <= tol) return QuadResult{value, estimate, attempt};
    if (attempt >= cfg.max_refinements)
      throw NumericError(convergence_message(estimate, tol, attempt));
    const bool refine_r = radial_est > 0.5 * tol;
    const bool refine_a = angular_est > 0.5 * tol;
    if (refine_r || !refine_a) ++kr;
    if (refine_a) ++ka;
  }
}

// Angles in [0, 2 pi) where the number of crossings of the ray from `origin`
// with the boundary of `region` (within extent(dir)) changes: tangencies and
// crossings that leave the extent. Found by scanning then bisecting. 2D only.
std::vector<double> crossing_change_angles(const Region& region, const Vec& origin,
                                           const std::function<double(const Vec&)>& extent,
                                           int scan = 1024);

// 2D angular driver: composite Gauss-Legendre on angle panels whose edges
// include `breaks`, refined locally where q and 2q nodes disagree. Near a
// boundary the ray integral varies on the scale of the boundary distance
// close to the tangent directions, so uniform directions converge slowly.
template <class RayFn>
QuadResult integrate_over_angle_panels(const QuadratureConfig& cfg, RayFn&& ray,
                                       std::vector<double> breaks) {
  constexpr double kTwoPi = 6.283185307179586;
  constexpr std::size_t kMaxPanels = 4096;
  const int base = std::max(4, cfg.angular_nodes / 8);
  for (int k = 0; k <= base; ++k) breaks.push_back(kTwoPi * k / base);
  std::sort(breaks.begin(), breaks.end());
  std::vector<double> edges;
  for (double b : breaks)
    if (edges.empty() || b - edges.back() > 1e-12) edges.push_back(b);

  struct Panel {
    double a, b;
    double fine = 0.0, coarse = 0.0, magnitude = 0.0, radial = 0.0;
  };
  const int q = 8;
  const GaussRule& coarse_rule = gauss_legendre(q);
  const GaussRule& fine_rule = gauss_legendre(2 * q);
  auto evaluate = [&](Panel& p, const RadialScheme& scheme) {
    // t = a + w (3 s^2 - 2 s^3) smooths square-root behaviour at tangencies.
    const double w = p.b - p.a;
    auto node = [&](double x, double& jac) {
      const double u = 0.5 * (x + 1.0);
      jac = 3.0 * w * u * (1.0 - u);
      return p.a + w * u * u * (3.0 - 2.0 * u);
    };
    p.fine = p.coarse = p.magnitude = p.radial = 0.0;
    for (std::size_t i = 0; i < fine_rule.nodes.size(); ++i) {
      double jac = 0.0;
      const double t = node(fine_rule.nodes[i], jac);
      const TwoLevel r = ray(make_vec({std::cos(t), std::sin(t)}), scheme, true);
      const double wt = jac * fine_rule.weights[i];
      p.fine += wt * r.fine;
      p.magnitude += wt * r.fine_abs;
      p.radial += wt * (r.fine - r.coarse);
    }
    for (std::size_t i = 0; i < coarse_rule.nodes.size(); ++i) {
      double jac = 0.0;
      const double t = node(coarse_rule.nodes[i], jac);
      p.coarse += jac * coarse_rule.weights[i] *
                  ray(make_vec({std::cos(t), std::sin(t)}), scheme, false).fine;
    }
  };

  int kr = 0;
  std::vector<Panel> panels;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) panels.push_back(Panel{edges[e], edges[e + 1]});
  auto scheme_at = [&](int level) {
    return RadialScheme{cfg.radial_nodes, cfg.radial_panels << level, cfg.grading_ratio,
                        cfg.grading_levels, cfg.singularity_exponent};
  };
  RadialScheme scheme = scheme_at(kr);
  for (Panel& p : panels) evaluate(p, scheme);
  const int max_passes = 4 * cfg.max_refinements;
  for (int attempt = 0;; ++attempt) {
    double value = 0.0, magnitude = 0.0, radial_est = 0.0, angular_est = 0.0;
    for (const Panel& p : panels) {
      value += p.fine;
      magnitude += p.magnitude;
      radial_est += p.radial;
      angular_est += std::abs(p.fine - p.coarse);
    }
    radial_est = std::abs(radial_est);
    const double estimate = radial_est + angular_est;
    const double tol =
        std::max({cfg.rel_tol * std::abs(value), cfg.abs_tol, kRoundingFloor * magnitude});
    if (estimate <= tol) return QuadResult{value, estimate, attempt};
    if (attempt >= max_passes || panels.size() > kMaxPanels)
      throw NumericError(convergence_message(estimate, tol, attempt));
    if (radial_est > 0.5 * tol && kr < cfg.max_refinements) {
      scheme = scheme_at(++kr);
      for (Panel& p : panels) evaluate(p, scheme);
      continue;
    }
    // Split every panel whose error exceeds its share of the angular budget.
    const double budget = 0.5 * tol;
    std::vector<Panel> next;
    next.reserve(2 * panels.size());
    for (const Panel& p : panels) {
      const double err = std::abs(p.fine - p.coarse);
      if (err <= budget * (p.b - p.a) / kTwoPi) {
        next.push_back(p);
        continue;
      }
      const double mid = 0.5 * (p.a + p.b);
      Panel left{p.a, mid}, right{mid, p.b};
      evaluate(left, scheme);
      evaluate(right, scheme);
      next.push_back(left);
      next.push_back(right);
    }
    panels.swap(next);
  }
}

// Adaptive 1D integral on [a, b] (uniform panels plus optional breakpoints).
template <class G>
QuadResult integrate_interval(const G& g, double a, double b, const QuadratureConfig& cfg,
                              std::span<const double> breaks = {}, bool singular_start = false) {
  for (int level = 0;; ++level) {
    RadialScheme scheme{cfg.radial_nodes, cfg.radial_panels << level, cfg.grading_ratio,
                        cfg.grading_levels, cfg.singularity_exponent};
    std::vector<double> cuts{a};
    for (double c : breaks)
      if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    TwoLevel total;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s)
      total += integrate_segment(g, cuts[s], cuts[s + 1], singular_start && s == 0, scheme);
    const double est = std::abs(total.fine - total.coarse);
    const double tol = std::max({cfg.rel_tol * std::abs(total.fine), cfg.abs_tol,
                                 kRoundingFloor * total.fine_abs});
    if (est <= tol) return QuadResult{total.fine, est, level};
    if (level >= cfg.max_refinements)
      throw NumericError("interval " + convergence_message(est, tol, level));
  }
}

// Per-direction support and smoothness breaks of a ray integrand.
struct RayGeometry {
  double scale = 1.0;                                            // epsilon, when in play
  std::function<double(const Vec&)> extent;                      // support radius along dir
  std::function<void(const Vec&, std::vector<double>&)> breaks;  // extra radial breakpoints
};

// Integral over R^n of f, singular at the origin with r^{n-1}|f| ~ r^{1-alpha}.
QuadResult integrate_singular(int dim, const std::function<double(const Vec&)>& f,
                              const QuadratureConfig& cfg, const RayGeometry& geometry = {});

// Integral of f over the shell r0 <= |z| <= r1; r1 = kInf uses the geometry extent.
QuadResult integrate_annulus(int dim, const std::function<double(const Vec&)>& f, double r0,
                             double r1, const QuadratureConfig& cfg,
                             const RayGeometry& geometry = {});

// Point-set with ray-crossing queries; implemented by Domain.
class Region {
 public:
  virtual ~Region() = default;
  virtual int dim() const = 0;
  virtual bool contains(const Vec& x) const = 0;
  // Appends the radii r in (0, rmax) where origin + r*dir crosses the boundary.
  virtual void ray_crossings(const Vec& origin, const Vec& dir, double rmax,
                             std::vector<double>& out) const = 0;
};

struct RegionSpec {
  const Region* region = nullptr;
  bool complement = false;  // integrate over the complement of `region`
  Vec center;               // intersected with the ball B(center, radius)
  double radius = 1.0;
};

// Integral of a bounded f over (region or its complement) within a ball.
QuadResult integrate_over_region(const std::function<double(const Vec&)>& f,
                                 const RegionSpec& spec, const QuadratureConfig& cfg);

// Builds the segment list of a ray: sorted unique radii in [0, extent].
void collect_breaks(std::vector<double>& radii, double extent);

}  // namespace nonloc
