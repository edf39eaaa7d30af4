#pragma once

// Pointwise evaluation of the nonlocal operator L_eps^Omega and of the local
// limit -div(M grad u).
//
// The regularized integrand subtracts grad u(x).(y - x), the gradient at the
// evaluation point.

#include "nonloc/domain.hpp"
#include "nonloc/kernel.hpp"
#include "nonloc/moments.hpp"
#include "nonloc/test_function.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace nonloc {

enum class Route { regularized, pv_limit, complement_decomposition };

std::string to_string(Route r);
Route route_from_string(const std::string& name);

// int J_eps(z) (u(x) - u(x + z) + grad u(x).z) dz over R^n.
QuadResult apply_nonlocal_fullspace(const TestFunction& u, const KernelFamily& family, const Vec& x,
                                    const QuadratureConfig& cfg = {});

struct PvResult {
  std::vector<double> radii;
  std::vector<double> values;
  std::vector<double> error_estimates;
  double limit = 0.0;
  double limit_error = 0.0;  // gap between the last two extrapolations
  double exponent = 0.0;     // fitted r-exponent of v(r) - limit
};

// Truncated integrals int_{|z| >= r} J_eps(z) (u(x) - u(x + z)) dz for each r
// (strictly decreasing) and their extrapolated limit as r -> 0. Throws
// CertificationError when the increments stop shrinking.
PvResult apply_nonlocal_pv(const TestFunction& u, const KernelFamily& family, const Vec& x,
                           const std::vector<double>& radii, const QuadratureConfig& cfg = {});

// L_eps^Omega u(x) for x strictly inside `domain`. ContractError "point not
// interior" otherwise. Route complement_decomposition subtracts a complement
// integral from the full-space value; route regularized integrates the
// regularized integrand over Omega and the gradient term over the complement
// in one domain-aware pass. pv_limit is rejected here (use apply_nonlocal_pv).
QuadResult apply_nonlocal_domain(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                 const Vec& x, Route route = Route::complement_decomposition,
                                 const QuadratureConfig& cfg = {});

// -sum_ij M_ij d_i d_j u(x).
double apply_local(const TestFunction& u, const Mat& m, const Vec& x);

struct EnergyCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;  // |lhs - rhs| / max(|rhs|, tiny)
  int points = 0;
};

// Outer cubature for a bounded domain: composite Gauss-Legendre on an interval,
// polar Gauss-Legendre / trapezoid on a ball. Points are strictly interior.
struct Cubature {
  std::vector<Vec> points;
  std::vector<double> weights;
};
Cubature domain_cubature(const Domain& domain, int panels, int nodes = 8);

// int_Omega (L_eps^Omega u) u  vs  1/2 int_Omega int_Omega J_eps(x - y) (u(x) - u(y))^2.
EnergyCheck energy_identity_check(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                  int panels = 8, const QuadratureConfig& cfg = {});

// int_{|z| >= r} J_eps(z) v.z dz; zero for even kernels.
QuadResult shell_moment(const KernelFamily& family, double r, const Vec& v,
                        const QuadratureConfig& cfg = {});

nlohmann::json to_json(const PvResult& r);
nlohmann::json to_json(const EnergyCheck& e);

}  // namespace nonloc
