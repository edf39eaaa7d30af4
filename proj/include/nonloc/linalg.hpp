#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace nonloc {

inline constexpr int kMaxDim = 3;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dynamic size with a fixed upper bound: no heap traffic in inner loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline Vec make_vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Vec zeros(int dim) { return Vec::Zero(dim); }
inline Mat identity(int dim) { return Mat::Identity(dim, dim); }

inline double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

inline double asymmetry(const Mat& m) { return max_abs(m - m.transpose()); }

// Surface measure of the unit sphere S^{n-1} in R^n.
inline double sphere_measure(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
    default: return 2.0 * std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim);
  }
}

}  // namespace nonloc
