#pragma once

// Smooth test functions with exact derivatives up to third order.
//
// Every recipe is a template over the scalar type; the double instance is the
// fast path used inside quadrature loops and the Jet instance supplies the
// gradient, Hessian and third-derivative tensor.

#include "nonloc/domain.hpp"
#include "nonloc/jet.hpp"
#include "nonloc/linalg.hpp"

#include <json.hpp>

#include <array>
#include <functional>
#include <optional>
#include <string>

namespace nonloc {

using JetArgs = std::array<Jet, kMaxDim>;

// Declared compatibility M grad u . n = 0 on the boundary of `domain`.
struct Compatibility {
  nlohmann::json domain;
  Mat m;
  bool claims_neumann = true;
};

struct TestFunction {
  int dim = 1;
  std::string recipe;
  nlohmann::json params;
  // supp u is contained in the closed box [support_lo, support_hi]; infinite
  // entries mean unbounded support.
  Vec support_lo, support_hi;
  bool global = true;
  bool extension = false;
  std::optional<Compatibility> compat;

  std::function<double(const Vec&)> eval;
  std::function<Jet(const JetArgs&)> jet_eval;

  double value(const Vec& x) const { return eval(x); }
  Jet jet(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  // Flattened d^3u/dx_i dx_j dx_k at index 9i + 3j + k.
  std::array<double, 27> third_derivs(const Vec& x) const;
  bool compact_support() const;
  // Radius of a ball about the box centre that contains supp u.
  double support_radius() const;
};

// Wraps a functor with `template <class T> T operator()(const T* x) const`.
template <class F>
TestFunction make_from_functor(int dim, std::string recipe, F f) {
  TestFunction u;
  u.dim = dim;
  u.recipe = std::move(recipe);
  u.support_lo = Vec::Constant(dim, -kInf);
  u.support_hi = Vec::Constant(dim, kInf);
  u.eval = [f](const Vec& x) { return f(x.data()); };
  u.jet_eval = [f](const JetArgs& x) { return f(x.data()); };
  return u;
}

// Recipes defined on all of R^n without a boundary claim.
TestFunction make_constant_function(int dim, double c);
TestFunction make_linear_function(const Vec& b, double c = 0.0);
// c + b.x + 1/2 x^T H x; H is symmetrized.
TestFunction make_quadratic_function(const Mat& h, const Vec& b, double c = 0.0);
// amplitude * exp(-1 / (1 - |x - center|^2 / radius^2)), zero outside.
TestFunction make_bump_function(const Vec& center, double radius, double amplitude = 1.0);
// a u + b v.
TestFunction combine(double a, const TestFunction& u, double b, const TestFunction& v);
// Not globally defined: global_extension rejects it.
TestFunction make_sampled_function(int dim, std::function<double(const Vec&)> eval,
                                   std::function<Jet(const JetArgs&)> jet_eval);

// Plain recipes with no boundary claim: "constant" {c}, "linear" {b, c},
// "quadratic" {h, b, c}, "bump" {center, radius, amplitude}, and the 1D
// "cos_k" / "sin_k" {k, plateau, width} (cos or sin of k pi x times an
// envelope equal to 1 on [-plateau, 1 + plateau]).
TestFunction make_recipe_function(int dim, const std::string& recipe,
                                  const nlohmann::json& params = nlohmann::json::object());

// Named recipes with M grad u . n = 0 on the boundary:
//   interval:         "cos_k"        {k, plateau, width}
//   ball:             "ball_radial"  {amplitude}: f(|S^-1(x - c)|^2 / R^2) with
//                     f(t) = (t - 1)^2 near t = 1, so grad u vanishes on the
//                     boundary and any SPD M is compatible
//   half_space_graph: "normal_bump"  {sigma, center}, M must be a multiple of I
//   any domain:       "constant"     {c}
// On the full space every plain recipe is accepted with no boundary claim.
// UnsupportedError for other pairs.
TestFunction make_compatible_function(const Domain& domain, const Mat& m, const std::string& recipe,
                                      const nlohmann::json& params = nlohmann::json::object());

// max |M grad u . n| over domain.boundary_samples(samples).
double neumann_compat_check(const TestFunction& u, const Domain& domain, const Mat& m,
                            int samples = 1000);

// Same evaluators tagged as the extension u~ to R^n.
TestFunction global_extension(const TestFunction& u, const Domain& domain);

nlohmann::json to_json(const TestFunction& u);

}  // namespace nonloc
