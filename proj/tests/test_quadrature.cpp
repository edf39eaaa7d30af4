#include "nonloc/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include <cmath>

using namespace nonloc;

namespace {

// (lo, hi) on the real line; enough geometry for region tests.
class Segment : public Region {
 public:
  Segment(double lo, double hi) : lo_(lo), hi_(hi) {}
  int dim() const override { return 1; }
  bool contains(const Vec& x) const override { return x(0) > lo_ && x(0) < hi_; }
  void ray_crossings(const Vec& o, const Vec& d, double rmax,
                     std::vector<double>& out) const override {
    for (double e : {lo_, hi_}) {
      const double r = (e - o(0)) / d(0);
      if (r > 0.0 && r < rmax) out.push_back(r);
    }
  }

 private:
  double lo_, hi_;
};

double bump2(double q) { return q < 1.0 ? std::exp(-1.0 / (1.0 - q)) : 0.0; }

}  // namespace

TEST_CASE("gauss-legendre rules integrate polynomials up to degree 2n-1") {
  for (int n : {2, 5, 8, 16, 32}) {
    const GaussRule& g = gauss_legendre(n);
    REQUIRE(g.nodes.size() == static_cast<std::size_t>(n));
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += g.weights[i] * std::pow(g.nodes[i], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      CHECK(std::abs(s - exact) <= 1e-12);
    }
  }
}

TEST_CASE("far-field panels are exact on polynomials") {
  QuadratureConfig cfg;
  const double a = 0.3, b = 2.7;
  auto p = [](double x) { return 1.0 - 3.0 * x + 0.5 * std::pow(x, 5) + 2.0 * std::pow(x, 11); };
  auto antider = [](double x) {
    return x - 1.5 * x * x + std::pow(x, 6) / 12.0 + std::pow(x, 12) / 6.0;
  };
  RadialScheme scheme{8, 4, 0.25, 6, 1.0};
  const TwoLevel t = integrate_segment(p, a, b, false, scheme);
  const double exact = antider(b) - antider(a);
  CHECK(std::abs(t.fine - exact) <= 1e-12 * std::abs(exact));
  CHECK(std::abs(t.coarse - exact) <= 1e-12 * std::abs(exact));
}

TEST_CASE("power singularity over a ball matches the closed form") {
  for (int n : {1, 2}) {
    for (double alpha : {0.5, 1.0, 1.5}) {
      for (double radius : {0.5, 1.0, 2.0}) {
        QuadratureConfig cfg;
        cfg.singularity_exponent = alpha;
        cfg.far_truncation = radius;
        auto f = [n, alpha](const Vec& z) { return std::pow(z.norm(), 2.0 - alpha - n); };
        const QuadResult r = integrate_singular(n, f, cfg);
        const double exact = sphere_measure(n) * std::pow(radius, 2.0 - alpha) / (2.0 - alpha);
        INFO("n=" << n << " alpha=" << alpha << " R=" << radius);
        CHECK(std::abs(r.value - exact) <= cfg.rel_tol * exact);
        CHECK(r.error_estimate <= cfg.rel_tol * std::abs(r.value));
      }
    }
  }
}

TEST_CASE("one-dimensional square-root profile integrates to 4/3") {
  QuadratureConfig cfg;
  cfg.singularity_exponent = 0.5;
  cfg.far_truncation = 1.0;
  const QuadResult r =
      integrate_singular(1, [](const Vec& z) { return std::pow(std::abs(z(0)), 0.5); }, cfg);
  CHECK(r.value == doctest::Approx(4.0 / 3.0).epsilon(1e-10));
}

TEST_CASE("regular integrand agrees with an iterated tensor oracle") {
  QuadratureConfig cfg;
  cfg.singularity_exponent = 0.01;
  cfg.far_truncation = 1.0;
  cfg.rel_tol = 1e-12;
  auto f = [](const Vec& z) { return bump2(z.squaredNorm()) * (1.0 + 0.3 * z(0) + z(1) * z(1)); };
  const QuadResult r = integrate_singular(2, f, cfg);

  boost::math::quadrature::tanh_sinh<double> ts;
  auto outer = [&](double x) {
    const double h = std::sqrt(std::max(0.0, 1.0 - x * x));
    if (h == 0.0) return 0.0;
    return ts.integrate([&](double y) { return f(make_vec({x, y})); }, -h, h, 1e-14);
  };
  const double oracle = ts.integrate(outer, -1.0, 1.0, 1e-13);
  CHECK(std::abs(r.value - oracle) <= 1e-10 * std::abs(oracle));
}

TEST_CASE("three-dimensional ball volume and radial moment") {
  QuadratureConfig cfg;
  cfg.far_truncation = 1.0;
  cfg.singularity_exponent = 0.0;
  const QuadResult v = integrate_singular(3, [](const Vec&) { return 1.0; }, cfg);
  CHECK(v.value == doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-12));
  const QuadResult m = integrate_singular(3, [](const Vec& z) { return z(2) * z(2); }, cfg);
  CHECK(m.value == doctest::Approx(4.0 * M_PI / 15.0).epsilon(1e-12));
}

TEST_CASE("region integral over an interval complement within a ball") {
  QuadratureConfig cfg;
  Segment seg(0.0, 1.0);
  RegionSpec spec{&seg, true, make_vec({0.5}), 2.0};
  const QuadResult r = integrate_over_region([](const Vec&) { return 1.0; }, spec, cfg);
  CHECK(r.value == doctest::Approx(3.0).epsilon(1e-12));

  spec.complement = false;
  auto g = [](const Vec& x) { return std::exp(x(0)); };
  const QuadResult inside = integrate_over_region(g, spec, cfg);
  CHECK(inside.value == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
}

TEST_CASE("full-ball region agrees with the singular path") {
  class Everything : public Region {
   public:
    int dim() const override { return 2; }
    bool contains(const Vec&) const override { return true; }
    void ray_crossings(const Vec&, const Vec&, double, std::vector<double>&) const override {}
  } all;
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-11;
  auto f = [](const Vec& z) { return std::cos(z(0)) * std::exp(-z(1) * z(1)); };
  RegionSpec spec{&all, false, zeros(2), 1.5};
  const QuadResult a = integrate_over_region(f, spec, cfg);
  cfg.far_truncation = 1.5;
  const QuadResult b = integrate_singular(2, f, cfg);
  CHECK(std::abs(a.value - b.value) <= 1e-9 * std::abs(b.value));
}

TEST_CASE("doubling the radial node count does not increase the estimate") {
  auto run = [](int nodes) {
    QuadratureConfig cfg;
    cfg.radial_nodes = nodes;
    cfg.far_truncation = 1.0;
    cfg.singularity_exponent = 1.0;
    cfg.max_refinements = 0;
    cfg.rel_tol = 0.5;
    return integrate_singular(
        1, [](const Vec& z) { return bump2(z.squaredNorm()) / std::abs(z(0)) * z(0) * z(0); },
        cfg);
  };
  double previous = kInf;
  for (int nodes : {4, 8, 16}) {
    const QuadResult r = run(nodes);
    CHECK(r.error_estimate <= previous);
    previous = r.error_estimate;
  }
}

TEST_CASE("interval integration with breakpoints") {
  QuadratureConfig cfg;
  auto g = [](double x) { return std::abs(x - 0.3) + std::sin(x); };
  const std::vector<double> cuts{0.3};
  const QuadResult r = integrate_interval(g, 0.0, 1.0, cfg, cuts);
  boost::math::quadrature::gauss_kronrod<double, 31> gk;
  const double oracle = gk.integrate(g, 0.0, 0.3) + gk.integrate(g, 0.3, 1.0);
  CHECK(r.value == doctest::Approx(oracle).epsilon(1e-13));
}

TEST_CASE("invalid configurations are rejected") {
  QuadratureConfig cfg;
  cfg.rel_tol = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = QuadratureConfig{};
  cfg.radial_nodes = 1;
  CHECK_THROWS_AS(cfg.validate(), ParameterError);
  cfg = QuadratureConfig{};
  CHECK_THROWS_AS(integrate_singular(2, [](const Vec&) { return 1.0; }, cfg), ParameterError);
}
