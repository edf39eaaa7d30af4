#include "nonloc/moments.hpp"

#include <Eigen/Eigenvalues>


namespace nonloc {

namespace {

Mat second_moment(int n, const std::function<double(const Vec&)>& rho, const RayGeometry& geom,
                  const QuadratureConfig& cfg) {
  Mat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      auto f = [&rho, i, j](const Vec& z) { return 0.5 * rho(z) * z(i) * z(j) / z.squaredNorm(); };
      m(i, j) = m(j, i) = integrate_singular(n, f, cfg, geom).value;
    }
  return m;
}

RayGeometry unscaled_geometry(const DensitySpec& d) {
  RayGeometry g;
  if (d.compact()) g.extent = [&d](const Vec& dir) { return d.extent_along(dir); };
  g.breaks = d.ray_breaks;
  return g;
}

double smallest_singular_value(const Mat& a) {
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().minCoeff();
}

}  // namespace

Mat sqrt_spd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) throw DomainError("matrix must be square");
  if (!m.allFinite()) throw DomainError("matrix has non-finite entries");
  if (asymmetry(m) > 1e-12 * std::max(1.0, max_abs(m)))
    throw DomainError("matrix is not symmetric");
  const Mat sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> eig(sym);
  if (eig.info() != Eigen::Success) throw DomainError("eigendecomposition failed");
  const double trace = sym.trace();
  const double floor = 1e-12 * std::abs(trace);
  if (!(trace > 0.0) || eig.eigenvalues().minCoeff() <= floor)
    throw DomainError("matrix is not positive definite");
  const Vec root = eig.eigenvalues().cwiseSqrt();
  Mat a = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
  return 0.5 * (a + a.transpose());
}

MomentumMatrix momentum_matrix(const DensitySpec& d, const QuadratureConfig& base_cfg) {
  validate_metadata(d);
  const QuadratureConfig cfg = config_for(d, base_cfg);
  MomentumMatrix out;
  out.dim = d.dim;
  const Mat m = second_moment(d.dim, d.eval, unscaled_geometry(d), cfg);
  out.m = 0.5 * (m + m.transpose());
  try {
    out.a = sqrt_spd(out.m);
  } catch (const DomainError& e) {
    throw CertificationError(std::string("momentum matrix is not positive definite: ") + e.what());
  }
  return out;
}

Mat scaled_momentum(const KernelFamily& family, const QuadratureConfig& base_cfg) {
  const QuadratureConfig cfg = config_for(family.density(), base_cfg);
  return second_moment(
      family.dim(), [&family](const Vec& z) { return family.scaled_density(z); },
      family.geometry(), cfg);
}

MomentCheck moment_cancellation_check(const DensitySpec& d, const Mat& a,
                                      const std::vector<Mat>& rotations,
                                      const std::vector<double>& zn_samples,
                                      const QuadratureConfig& base_cfg) {
  validate_metadata(d);
  const int n = d.dim;
  if (a.rows() != n || a.cols() != n) throw ParameterError("A must be n x n");
  {
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (a + a.transpose()));
    if (asymmetry(a) > 1e-12 * std::max(1.0, max_abs(a)) || eig.eigenvalues().minCoeff() <= 0.0)
      throw ParameterError("A must be symmetric positive definite");
  }
  for (const Mat& q : rotations) {
    if (q.rows() != n || q.cols() != n) throw ParameterError("rotation must be n x n");
    if (max_abs(q.transpose() * q - identity(n)) > 1e-10 || std::abs(q.determinant() - 1.0) > 1e-10)
      throw ParameterError("rotation must be orthonormal with determinant 1");
  }
  for (double z : zn_samples)
    if (z == 0.0) throw ParameterError("z_n = 0 is not an admissible sample");

  MomentCheck out;
  out.note =
      "sampled over SO(n) only; the reflection-extended O(n) form of the condition is not asserted";
  if (n == 1) {
    out.note = "no tangential variables in one dimension; the condition is void. " + out.note;
    return out;
  }

  QuadratureConfig cfg = config_for(d, base_cfg);
  cfg.abs_tol = std::min(cfg.abs_tol, 1e-14);
  cfg.rel_tol = std::min(cfg.rel_tol, 1e-10);
  const double reach = d.compact() ? d.support_radius : cfg.far_truncation.value_or(50.0);
  const double t_max = reach / smallest_singular_value(a);
  cfg.far_truncation.reset();
  auto kernel = [&d](const Vec& y) {
    const double q = y.squaredNorm();
    return q == 0.0 ? 0.0 : d.eval(y) / q;
  };

  for (std::size_t qi = 0; qi < rotations.size(); ++qi) {
    const Mat p = a * rotations[qi];
    for (double z : zn_samples) {
      ++out.samples;
      double worst = 0.0;
      if (n == 2) {
        const Vec p1 = p.col(0), p2 = p.col(1);
        const double t_star = -z * p1.dot(p2) / p1.squaredNorm();
        auto v = [&](double t) { return kernel(t * p1 + z * p2) * t; };
        const double lo = std::min(-t_max, t_star - t_max), hi = std::max(t_max, t_star + t_max);
        const std::vector<double> cuts{t_star, 0.0};
        worst = std::abs(integrate_interval(v, lo, hi, cfg, cuts).value);
      } else {
        const Mat pt = p.leftCols(2);
        const Vec p3 = p.col(2);
        const Eigen::Vector2d center =
            -(pt.transpose() * pt).inverse() * (pt.transpose() * p3) * z;
        const double radius = center.norm() + t_max;
        for (int k = 0; k < 2; ++k) {
          auto ray = [&](const Vec& w, const RadialScheme& scheme, bool need_coarse) {
            auto g = [&](double r) {
              const Eigen::Vector2d zp = center + r * Eigen::Vector2d(w(0), w(1));
              return kernel(pt * zp + z * p3) * zp(k) * r;
            };
            return integrate_segment(g, 0.0, radius, true, scheme, need_coarse);
          };
          worst = std::max(worst, std::abs(integrate_over_directions(2, cfg, ray).value));
        }
      }
      if (worst > out.max_moment || out.worst_rotation < 0) {
        out.max_moment = worst;
        out.worst_rotation = static_cast<int>(qi);
        out.worst_zn = z;
      }
    }
  }
  return out;
}

std::vector<Mat> default_rotations(int dim) {
  std::vector<Mat> out;
  if (dim == 1) return {identity(1)};
  if (dim == 2) {
    for (int k = 0; k < 16; ++k) {
      const double t = 2.0 * M_PI * k / 16.0;
      Mat q(2, 2);
      q << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
      out.push_back(q);
    }
    return out;
  }
  if (dim == 3) {
    auto halton = [](int index, int base) {
      double f = 1.0, r = 0.0;
      for (int i = index; i > 0; i /= base) {
        f /= base;
        r += f * (i % base);
      }
      return r;
    };
    for (int k = 1; k <= 24; ++k) {
      const double u1 = halton(k, 2), u2 = halton(k, 3), u3 = halton(k, 5);
      const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
      const double x = a * std::sin(2.0 * M_PI * u2), y = a * std::cos(2.0 * M_PI * u2);
      const double z = b * std::sin(2.0 * M_PI * u3), w = b * std::cos(2.0 * M_PI * u3);
      Mat q(3, 3);
      q << 1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w),
          2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w),
          2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y);
      out.push_back(q);
    }
    return out;
  }
  throw ParameterError("dimension must be 1, 2 or 3");
}

std::vector<double> default_zn_samples() { return {-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0}; }

nlohmann::json matrix_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const MomentumMatrix& mm) {
  return {{"m", matrix_json(mm.m)}, {"a", matrix_json(mm.a)}, {"dim", mm.dim}};
}

nlohmann::json to_json(const MomentCheck& mc) {
  return {{"max_moment", mc.max_moment},
          {"samples", mc.samples},
          {"worst_rotation", mc.worst_rotation},
          {"worst_zn", mc.worst_zn},
          {"note", mc.note}};
}

}  // namespace nonloc
