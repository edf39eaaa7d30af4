#pragma once

// Momentum matrix M = 1/2 int J(z) z (x) z dz, its SPD root A, and the sampled
// moment-cancellation check int J(AQ(z', z_n)) z' dz' = 0.

#include "nonloc/kernel.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace nonloc {

struct MomentumMatrix {
  int dim = 0;
  Mat m;
  Mat a;
};

// Throws NumericError on quadrature failure, CertificationError if the
// symmetrized result is not positive definite.
MomentumMatrix momentum_matrix(const DensitySpec& d, const QuadratureConfig& cfg = {});

// Same integral for the scaled density rho_eps; equals the unscaled matrix.
Mat scaled_momentum(const KernelFamily& family, const QuadratureConfig& cfg = {});

// Unique SPD square root. DomainError if the input is not symmetric within
// 1e-12 or has an eigenvalue at or below 1e-12 * trace.
Mat sqrt_spd(const Mat& m);

struct MomentCheck {
  double max_moment = 0.0;
  int samples = 0;
  int worst_rotation = -1;
  double worst_zn = 0.0;
  std::string note;
};

MomentCheck moment_cancellation_check(const DensitySpec& d, const Mat& a,
                                      const std::vector<Mat>& rotations,
                                      const std::vector<double>& zn_samples,
                                      const QuadratureConfig& cfg = {});

// 16 equispaced angles for n = 2; 24 quaternion rotations from a Halton
// sequence for n = 3; the identity for n = 1.
std::vector<Mat> default_rotations(int dim);
std::vector<double> default_zn_samples();

nlohmann::json to_json(const MomentumMatrix& mm);
nlohmann::json to_json(const MomentCheck& mc);
nlohmann::json matrix_json(const Mat& m);

}  // namespace nonloc
