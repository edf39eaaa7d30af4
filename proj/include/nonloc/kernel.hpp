#pragma once

// Densities rho, their scaled families rho_eps(x) = eps^{-n} rho(x/eps), the
// kernels J_eps = rho_eps/|x|^2, and sampled certifications of the growth,
// integrability and evenness hypotheses a density must satisfy.

#include "nonloc/linalg.hpp"
#include "nonloc/quadrature.hpp"

#include <json.hpp>

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nonloc {

struct DensitySpec {
  int dim = 1;
  std::function<double(const Vec&)> eval;
  std::function<Vec(const Vec&)> grad_eval;
  double alpha = 1.0;   // singularity order, in (0, 2)
  double big_n = 4.0;   // decay exponent, > 3 - alpha
  double c0 = 1.0;
  double c1 = 1.0;
  double support_radius = kInf;
  bool is_radial = false;
  bool is_even = true;  // declared; false only for diagnostic constructions
  std::string kind;
  nlohmann::json params;

  // Support radius along a unit direction, and radii where rho is not smooth.
  // Both are optional; without them the support radius bounds every ray.
  std::function<double(const Vec&)> ray_extent;
  std::function<void(const Vec&, std::vector<double>&)> ray_breaks;

  double extent_along(const Vec& dir) const {
    return ray_extent ? ray_extent(dir) : support_radius;
  }
  bool compact() const { return std::isfinite(support_radius); }
};

// Throws ParameterError unless alpha in (0,2), N > 3 - alpha, c0, c1 > 0 and
// the evaluators are set.
void validate_metadata(const DensitySpec& d);

struct BumpOptions {
  int dim = 1;
  double mass = -1.0;       // L1 norm; negative selects 2n
  double alpha = 1.0;
  double big_n = 4.0;
  bool singular = false;    // multiply by |x|^{2-alpha-n}
};

// kappa * exp(-1/(1-|x|^2)) on the unit ball, optionally times |x|^{2-alpha-n}.
DensitySpec make_bump_density(const BumpOptions& opt);

// kappa * (1-|x|^2)^k on the unit ball, k >= 2.
DensitySpec make_polynomial_density(int dim, int k, double mass = -1.0, double alpha = 1.0);

// |x|^{2-n-2s} chi(|x|) with chi == 1 up to cutoff_radius and 0 beyond
// cutoff_radius + transition_width.
DensitySpec make_fractional_density(int dim, double s, double cutoff_radius = 1.0,
                                    double transition_width = 1.0);

// rho(x) = base(Bx) |x|^2 / |Bx|^2 for a radial base and SPD B with det 1.
DensitySpec make_anisotropic_density(const DensitySpec& base, const Mat& b);

// base(x - shift). Not even; used to exercise failing certifications.
DensitySpec make_shifted_density(const DensitySpec& base, const Vec& shift);

// User density with declared metadata; c0 and c1 are taken as given.
DensitySpec make_custom_density(int dim, std::function<double(const Vec&)> eval,
                                std::function<Vec(const Vec&)> grad, double alpha,
                                double big_n, double c0, double c1, double support_radius,
                                bool is_radial);

// Smooth radial cutoff: 1 for r <= a, 0 for r >= a + w.
double smooth_cutoff(double r, double a, double w);
double smooth_cutoff_derivative(double r, double a, double w);

class KernelFamily {
 public:
  KernelFamily(DensitySpec density, double epsilon);

  const DensitySpec& density() const { return *density_; }
  double epsilon() const { return epsilon_; }
  int dim() const { return density_->dim; }

  double scaled_density(const Vec& x) const { return inv_scale_ * density_->eval(x / epsilon_); }
  // rho_eps(x)/|x|^2; DomainError at x = 0.
  double kernel(const Vec& x) const;
  // Support radius of rho_eps (kInf if not compact).
  double support_radius() const { return epsilon_ * density_->support_radius; }
  // Ray geometry of rho_eps for the quadrature engine.
  RayGeometry geometry() const;

 private:
  std::shared_ptr<const DensitySpec> density_;
  double epsilon_;
  double inv_scale_;
};

double eval_scaled_density(const KernelFamily& family, const Vec& x);
double eval_scaled_kernel(const KernelFamily& family, const Vec& x);

// Quadrature settings adapted to a density (singularity exponent = alpha).
QuadratureConfig config_for(const DensitySpec& d, QuadratureConfig base = {});

// L1 norm of rho_eps.
QuadResult scaled_mass(const KernelFamily& family, const QuadratureConfig& cfg);

struct CertificationRecord {
  std::string check;
  bool pass = false;
  double worst_ratio = 0.0;
  double value = 0.0;
  std::string detail;
};

CertificationRecord check_integrability(const DensitySpec& d, const QuadratureConfig& cfg = {});
CertificationRecord check_growth_bounds(const DensitySpec& d, int sample_count = 512);
CertificationRecord check_evenness(const DensitySpec& d, int sample_count = 1000,
                                   unsigned seed = 12345);

struct TailMass {
  double epsilon = 0.0;
  double mass = 0.0;
  double error_estimate = 0.0;
};

// Mass of rho_eps outside B_delta for each eps (strictly decreasing list).
std::vector<TailMass> check_dirac_property(const DensitySpec& d, double delta,
                                           const std::vector<double>& epsilons,
                                           const QuadratureConfig& cfg = {});

// Directions used for shell sampling: +-1 in 1D, equispaced in 2D, a
// Fibonacci lattice in 3D.
std::vector<Vec> sample_directions(int dim, int count);

nlohmann::json to_json(const CertificationRecord& r);
nlohmann::json to_json(const DensitySpec& d);

}  // namespace nonloc
