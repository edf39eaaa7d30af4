#pragma once

// epsilon sweeps of the pointwise error e(x) = L_eps^Omega u(x) - L^Omega u(x),
// discrete L^p norms on cell-centred grids, log-log rate fits and the
// convergence report.

#include "nonloc/domain.hpp"
#include "nonloc/kernel.hpp"
#include "nonloc/moments.hpp"
#include "nonloc/operators.hpp"
#include "nonloc/test_function.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace nonloc {

// A zero error makes log e undefined: the field is exact, not a rate.
class DegenerateFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 128 cells per axis for n = 1, 48 for n = 2, 24 for n = 3.
int default_grid_resolution(int dim);

struct EvaluationGrid {
  std::vector<Vec> points;  // cell centres inside the domain
  double cell_volume = 0.0;
  Vec lo, hi;
  int resolution = 0;
};

// Uniform cell-centred grid over the domain's bounding box, masked to the
// domain. Unbounded domains use the box around supp u inflated by the kernel
// reach eps * R_supp, outside of which e vanishes.
EvaluationGrid make_evaluation_grid(const TestFunction& u, const KernelFamily& family,
                                    const Domain& domain, int resolution);

struct ErrorField {
  std::vector<double> error;           // |e(x_i)|; 0 at failed points
  std::vector<double> error_estimate;  // quadrature estimate per point
  std::vector<char> failed;
  std::vector<std::string> failures;   // "i: message" in index order
  int max_refinements = 0;
};

// Parallel over points with `workers` OpenMP threads (0 = all available).
// Results are stored by index, so the output does not depend on the
// thread count.
ErrorField evaluate_error_field(const TestFunction& u, const KernelFamily& family, const Domain& domain,
                                const Mat& m, const std::vector<Vec>& points, const QuadratureConfig& cfg,
                                Route route = Route::complement_decomposition, int workers = 0);

// Serial reference of the same computation.
ErrorField evaluate_error_field_serial(const TestFunction& u, const KernelFamily& family,
                                       const Domain& domain, const Mat& m, const std::vector<Vec>& points,
                                       const QuadratureConfig& cfg,
                                       Route route = Route::complement_decomposition);

// Pairwise sum in index order.
double pairwise_sum(const std::vector<double>& v);

struct LpError {
  double p = 2.0;
  double value = 0.0;
  double error_estimate = 0.0;  // norm of (|e| + quadrature estimate) minus value
  int points = 0;
  int points_failed = 0;
};

// (sum |e_i|^p vol)^{1/p} over non-failed points. NumericError when more than
// 1% of the points failed.
LpError lp_norm(const ErrorField& field, double cell_volume, double p);

LpError lp_error(const TestFunction& u, const KernelFamily& family, const Domain& domain, const Mat& m,
                 double p, int grid_resolution = 0, const QuadratureConfig& cfg = {}, int workers = 0);

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;  // log C
  double residual = 0.0;   // max |log e - fit|
};

// Least squares through (log eps, log e). ParameterError for fewer than 4
// pairs, DegenerateFitError if any e == 0.
RateFit fit_rate(const std::vector<std::pair<double, double>>& errors);

struct StudySpec {
  DensitySpec density;
  Domain domain = Domain::full_space(1);
  TestFunction u;
  std::vector<double> p_values{2.0};
  std::vector<double> epsilons{0.4, 0.2, 0.1, 0.05};
  int grid_resolution = 0;
  QuadratureConfig quadrature;
  Route route = Route::complement_decomposition;
  // Run even if u violates the natural boundary condition.
  bool diagnostic = false;
  std::string name;
};

struct StudyRow {
  double p = 0.0;
  double epsilon = 0.0;
  LpError lp;
  int max_refinements = 0;
};

struct RateRecord {
  double p = 0.0;
  double theoretical_slope = 0.0;
  std::optional<double> fitted_slope;  // only when residual <= 0.25
  RateFit fit;
  bool degenerate = false;
  bool pass = false;
  bool superconvergent = false;
  std::string note;
};

struct ConvergenceReport {
  std::string name;
  nlohmann::json density;
  nlohmann::json domain;
  nlohmann::json test_function;
  Mat m;
  double compat_residual = 0.0;  // max |M grad u . n|; 0 without boundary
  bool diagnostic = false;
  std::vector<double> w3p_norms;  // ||u||_{W^{3,p}} per p, on the finest grid
  std::vector<StudyRow> rows;    // p-major, epsilons in StudySpec order
  std::vector<RateRecord> rates;
  std::vector<std::string> failures;
  double wall_seconds = 0.0;
  int workers = 0;
  bool all_pass() const;
};

// 1 on the full space, 1/p with a boundary.
double theoretical_rate(const Domain& domain, double p);

// One-sided: fitted >= theoretical - 0.15.
inline constexpr double kRateTolerance = 0.15;
inline constexpr double kMaxFitResidual = 0.25;
inline constexpr double kCompatTolerance = 1e-8;

// ContractError when the domain has a boundary, u violates the natural
// boundary condition beyond kCompatTolerance, and the StudySpec is not
// diagnostic.
ConvergenceReport convergence_study(const StudySpec& spec, int workers = 0);

// (sum_{|k| <= 3} ||D^k u||_p^p)^{1/p} by the midpoint rule on `grid`, with
// Frobenius norms of the derivative tensors.
double sobolev_w3p_estimate(const TestFunction& u, const EvaluationGrid& grid, double p);

struct ProfilePoint {
  Vec x;
  double distance = 0.0;  // boundary distance; +inf on the full space
  double error = 0.0;
  double error_estimate = 0.0;
};

std::vector<Vec> transect(const Vec& from, const Vec& to, int points);

std::vector<ProfilePoint> boundary_layer_profile(const TestFunction& u, const KernelFamily& family,
                                                 const Domain& domain, const Mat& m,
                                                 const std::vector<Vec>& points,
                                                 const QuadratureConfig& cfg = {},
                                                 Route route = Route::complement_decomposition);

// `p,epsilon,lp_error,err_est,points_failed`, %.17g, LF endings.
std::string errors_csv(const ConvergenceReport& r);
nlohmann::json to_json(const ConvergenceReport& r);
nlohmann::json to_json(const std::vector<ProfilePoint>& profile);

}  // namespace nonloc
