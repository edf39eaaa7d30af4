#include "nonloc/moments.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include <cmath>

using namespace nonloc;

namespace {

DensitySpec unit_bump(int dim, double mass = -1.0) {
  BumpOptions o;
  o.dim = dim;
  o.mass = mass;
  return make_bump_density(o);
}

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

}  // namespace

TEST_CASE("radial densities of mass 2n have identity momentum") {
  for (int n : {1, 2, 3}) {
    const MomentumMatrix mm = momentum_matrix(unit_bump(n));
    CHECK(max_abs(mm.m - identity(n)) <= 1e-6);
    CHECK(max_abs(mm.a - identity(n)) <= 1e-6);
  }
  for (int n : {1, 2}) {
    const DensitySpec frac = make_fractional_density(n, 0.75);
    QuadratureConfig cfg;
    cfg.rel_tol = 1e-12;
    const double mass = scaled_mass(KernelFamily(frac, 1.0), cfg).value;
    const MomentumMatrix mm = momentum_matrix(frac);
    CHECK(max_abs(mm.m - (mass / (2.0 * n)) * identity(n)) <= 1e-6);
  }
}

TEST_CASE("anisotropic momentum is B^-2 with root B^-1") {
  const Mat b = diag2(2.0, 0.5);
  const MomentumMatrix mm = momentum_matrix(make_anisotropic_density(unit_bump(2), b));
  CHECK(max_abs(mm.m - diag2(0.25, 4.0)) <= 1e-6);
  CHECK(max_abs(mm.a - diag2(0.5, 2.0)) <= 1e-6);

  Mat rotated(2, 2);
  const double c = std::cos(0.4), s = std::sin(0.4);
  Mat q(2, 2);
  q << c, -s, s, c;
  rotated = q * diag2(1.6, 1.0 / 1.6) * q.transpose();
  const MomentumMatrix mr = momentum_matrix(make_anisotropic_density(unit_bump(2), rotated));
  CHECK(max_abs(mr.m - (rotated * rotated).inverse()) <= 1e-6);
}

TEST_CASE("one-dimensional momentum is half the mass") {
  const double m0 = 1.7;
  const DensitySpec d = unit_bump(1, m0);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double mass =
      2.0 * ts.integrate([&](double w) { return d.eval(make_vec({w})); }, 0.0, 1.0, 1e-15);
  const MomentumMatrix mm = momentum_matrix(d);
  CHECK(mm.m(0, 0) == doctest::Approx(0.5 * mass).epsilon(1e-9));
  CHECK(mass == doctest::Approx(m0).epsilon(1e-12));
}

TEST_CASE("momentum is invariant under scaling") {
  Mat b = diag2(2.0, 0.5);
  for (const DensitySpec& d :
       {unit_bump(2), make_fractional_density(2, 0.25), make_anisotropic_density(unit_bump(2), b)}) {
    const Mat m = momentum_matrix(d).m;
    for (double eps : {0.5, 0.1}) CHECK(max_abs(scaled_momentum(KernelFamily(d, eps)) - m) <= 1e-7);
  }
}

TEST_CASE("spd square root") {
  CHECK(max_abs(sqrt_spd(identity(3)) - identity(3)) <= 1e-15);
  CHECK(max_abs(sqrt_spd(diag2(4.0, 1.0)) - diag2(2.0, 1.0)) <= 1e-15);
  CHECK(max_abs(sqrt_spd(diag2(0.25, 4.0)) - diag2(0.5, 2.0)) <= 1e-15);

  Mat m(3, 3);
  m << 4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0;
  const Mat a = sqrt_spd(m);
  CHECK(max_abs(a * a - m) <= 1e-10 * max_abs(m));
  CHECK(max_abs(sqrt_spd(a * a) - a) <= 1e-8);

  CHECK_THROWS_AS(sqrt_spd(diag2(1.0, -1.0)), DomainError);
  CHECK_THROWS_AS(sqrt_spd(diag2(1.0, 1e-14)), DomainError);
  Mat asym(2, 2);
  asym << 1.0, 0.1, 0.0, 1.0;
  CHECK_THROWS_AS(sqrt_spd(asym), DomainError);
}

TEST_CASE("moment cancellation for radial kernels") {
  for (const DensitySpec& d : {unit_bump(2), make_fractional_density(2, 0.75)}) {
    const MomentumMatrix mm = momentum_matrix(d);
    const MomentCheck c = moment_cancellation_check(d, mm.a, default_rotations(2), default_zn_samples());
    CHECK(c.max_moment <= 1e-8);
    CHECK(c.samples == 16 * 8);
    CHECK(c.note.find("O(n)") != std::string::npos);
  }
  const DensitySpec d3 = unit_bump(3);
  const MomentCheck c3 = moment_cancellation_check(d3, identity(3), default_rotations(3), {0.5, -1.0});
  CHECK(c3.max_moment <= 1e-8);
}

TEST_CASE("moment cancellation for the anisotropic construction") {
  const Mat b = diag2(2.0, 0.5);
  const DensitySpec d = make_anisotropic_density(unit_bump(2), b);
  const MomentumMatrix mm = momentum_matrix(d);
  const MomentCheck c = moment_cancellation_check(d, mm.a, default_rotations(2), default_zn_samples());
  CHECK(c.max_moment <= 1e-6);
}

TEST_CASE("a shifted kernel breaks moment cancellation") {
  const DensitySpec d = make_shifted_density(unit_bump(2), make_vec({0.3, 0.0}));
  const MomentCheck c = moment_cancellation_check(d, identity(2), {identity(2)}, {0.5});
  // Oracle: direct adaptive quadrature of int J(t, 0.5) t dt.
  boost::math::quadrature::gauss_kronrod<double, 61> gk;
  auto v = [&](double t) {
    const Vec y = make_vec({t, 0.5});
    return d.eval(y) / y.squaredNorm() * t;
  };
  const double oracle = gk.integrate(v, -1.3, 1.3, 20, 1e-14);
  CHECK(c.max_moment > 1e-3);
  CHECK(c.max_moment == doctest::Approx(std::abs(oracle)).epsilon(1e-8));
}

TEST_CASE("moment check argument validation") {
  const DensitySpec d = unit_bump(2);
  CHECK_THROWS_AS(moment_cancellation_check(d, identity(2), {identity(2)}, {0.0}), ParameterError);
  Mat reflect = diag2(1.0, -1.0);
  CHECK_THROWS_AS(moment_cancellation_check(d, identity(2), {reflect}, {0.5}), ParameterError);
  for (const Mat& q : default_rotations(3)) {
    CHECK(max_abs(q.transpose() * q - identity(3)) <= 1e-12);
    CHECK(q.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("momentum matrix serializes") {
  const nlohmann::json j = to_json(momentum_matrix(unit_bump(2)));
  CHECK(j["dim"] == 2);
  CHECK(j["m"].size() == 2);
  CHECK(j["a"][0].size() == 2);
}
