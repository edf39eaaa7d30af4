#include "nonloc/domain.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

#include <cmath>

namespace nonloc {

std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::full_space: return "full_space";
    case DomainKind::half_space_graph: return "half_space_graph";
    case DomainKind::interval: return "interval";
    case DomainKind::ball: return "ball";
  }
  return "unknown";
}

double GraphFunction::value(const Vec& yp) const {
  if (tangent_dim == 0) return amplitude;
  return (*this)(yp.data());
}

Vec GraphFunction::gradient(const Vec& yp) const {
  Vec g = Vec::Zero(tangent_dim);
  if (tangent_dim == 0 || flat()) return g;
  const double v = value(yp);
  for (int i = 0; i < tangent_dim; ++i) g(i) = -2.0 * (yp(i) - center[i]) / (width * width) * v;
  return g;
}

Mat GraphFunction::hessian(const Vec& yp) const {
  Mat h = Mat::Zero(tangent_dim, tangent_dim);
  if (tangent_dim == 0 || flat()) return h;
  const double v = value(yp), w2 = width * width;
  for (int i = 0; i < tangent_dim; ++i)
    for (int j = 0; j < tangent_dim; ++j) {
      const double di = yp(i) - center[i], dj = yp(j) - center[j];
      h(i, j) = v * (4.0 * di * dj / (w2 * w2) - (i == j ? 2.0 / w2 : 0.0));
    }
  return h;
}

double GraphFunction::c1_norm() const {
  if (tangent_dim == 0) return std::abs(amplitude);
  return std::abs(amplitude) * (1.0 + std::sqrt(2.0 / std::exp(1.0)) / width);
}

namespace {

void require_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must be 1, 2 or 3");
}

void check_rotation(const Mat& q, int n) {
  if (q.rows() != n || q.cols() != n) throw ParameterError("rotation must be n x n");
  if (max_abs(q.transpose() * q - identity(n)) > 1e-10 || std::abs(q.determinant() - 1.0) > 1e-10)
    throw ParameterError("rotation must be orthonormal with determinant 1");
}

std::vector<double> nlj_vec(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

nlohmann::json mat_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Domain Domain::full_space(int dim) {
  require_dim(dim);
  Domain d;
  d.kind_ = DomainKind::full_space;
  d.dim_ = dim;
  return d;
}

Domain Domain::interval(double a, double b) {
  if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
    throw ParameterError("interval needs finite a < b");
  Domain d;
  d.kind_ = DomainKind::interval;
  d.dim_ = 1;
  d.a_ = a;
  d.b_ = b;
  return d;
}

Domain Domain::ball(const Vec& center, double radius, const Mat& shape, bool exterior) {
  const int n = static_cast<int>(center.size());
  require_dim(n);
  if (!(radius > 0.0)) throw ParameterError("ball radius must be positive");
  Domain d;
  d.kind_ = DomainKind::ball;
  d.dim_ = n;
  d.center_ = center;
  d.radius_ = radius;
  d.exterior_ = exterior;
  d.shape_ = shape.size() == 0 ? identity(n) : shape;
  if (d.shape_.rows() != n || d.shape_.cols() != n) throw ParameterError("shape must be n x n");
  if (asymmetry(d.shape_) > 1e-12 * std::max(1.0, max_abs(d.shape_)))
    throw ParameterError("shape must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(d.shape_);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) throw ParameterError("shape must be positive definite");
  d.shape_inv_ = d.shape_.inverse();
  d.round_ = (d.shape_ - identity(n)).cwiseAbs().maxCoeff() == 0.0;
  return d;
}

Domain Domain::half_space_graph(int dim, const GraphFunction& graph, const Mat& rotation) {
  require_dim(dim);
  if (!(graph.width > 0.0)) throw ParameterError("graph width must be positive");
  if (!std::isfinite(graph.amplitude)) throw ParameterError("graph amplitude must be finite");
  Domain d;
  d.kind_ = DomainKind::half_space_graph;
  d.dim_ = dim;
  d.graph_ = graph;
  d.graph_.tangent_dim = dim - 1;
  d.rotation_ = rotation.size() == 0 ? identity(dim) : rotation;
  check_rotation(d.rotation_, dim);
  return d;
}

bool Domain::contains(const Vec& x) const {
  switch (kind_) {
    case DomainKind::full_space: return true;
    case DomainKind::interval: return x(0) > a_ && x(0) < b_;
    case DomainKind::ball: {
      const double q = (shape_inv_ * (x - center_)).squaredNorm();
      return exterior_ ? q > radius_ * radius_ : q < radius_ * radius_;
    }
    case DomainKind::half_space_graph: {
      const Vec y = rotation_.transpose() * x;
      return y(dim_ - 1) > graph_.value(y.head(dim_ - 1));
    }
  }
  return false;
}

double Domain::ellipsoid_distance(const Vec& x) const {
  const Vec p = x - center_;
  if (dim_ == 1) return std::abs(radius_ * shape_(0, 0) - std::abs(p(0)));
  using boost::math::tools::brent_find_minima;
  if (dim_ == 2) {
    auto dist2 = [&](double t) {
      const Vec q = radius_ * (shape_ * make_vec({std::cos(t), std::sin(t)}));
      return (p - q).squaredNorm();
    };
    constexpr int kSamples = 256;
    const double h = 2.0 * M_PI / kSamples;
    int best = 0;
    double best_v = kInf;
    for (int k = 0; k < kSamples; ++k) {
      const double v = dist2(h * k);
      if (v < best_v) {
        best_v = v;
        best = k;
      }
    }
    const auto r = brent_find_minima(dist2, h * (best - 1), h * (best + 1), 52);
    return std::sqrt(std::min(best_v, r.second));
  }
  auto point = [&](double th, double ph) {
    return Vec(radius_ * (shape_ * make_vec({std::sin(th) * std::cos(ph),
                                              std::sin(th) * std::sin(ph), std::cos(th)})));
  };
  constexpr int kTheta = 32, kPhi = 64;
  double th = 0.0, ph = 0.0, best_v = kInf;
  for (int i = 0; i <= kTheta; ++i)
    for (int j = 0; j < kPhi; ++j) {
      const double t = M_PI * i / kTheta, f = 2.0 * M_PI * j / kPhi;
      const double v = (p - point(t, f)).squaredNorm();
      if (v < best_v) {
        best_v = v;
        th = t;
        ph = f;
      }
    }
  double dt = M_PI / kTheta, dp = 2.0 * M_PI / kPhi;
  for (int round = 0; round < 8; ++round) {
    auto r1 = brent_find_minima([&](double t) { return (p - point(t, ph)).squaredNorm(); },
                                th - dt, th + dt, 52);
    th = r1.first;
    auto r2 = brent_find_minima([&](double f) { return (p - point(th, f)).squaredNorm(); },
                                ph - dp, ph + dp, 52);
    ph = r2.first;
    best_v = std::min(best_v, r2.second);
    dt *= 0.5;
    dp *= 0.5;
  }
  return std::sqrt(best_v);
}

double Domain::graph_distance(const Vec& y) const {
  const int m = dim_ - 1;
  const double yn = y(m);
  if (m == 0 || graph_.flat()) return std::abs(yn - graph_.value(y.head(m)));
  const Vec yp = y.head(m);
  auto phi = [&](const Vec& z) {
    return 0.5 * ((z - yp).squaredNorm() + square(graph_.value(z) - yn));
  };
  Vec z = yp;
  double f = phi(z);
  for (int it = 0; it < 60; ++it) {
    const double r = graph_.value(z) - yn;
    const Vec dg = graph_.gradient(z);
    const Vec grad = (z - yp) + r * dg;
    const Mat h = identity(m) + dg * dg.transpose() + r * graph_.hessian(z);
    Eigen::LLT<Mat> llt(h);
    Vec step = llt.info() == Eigen::Success ? Vec(-llt.solve(grad)) : Vec(-0.5 * grad);
    double t = 1.0;
    double f_new = phi(z + step);
    while (f_new > f && t > 1e-12) {
      t *= 0.5;
      f_new = phi(z + t * step);
    }
    if (f_new > f) break;
    z += t * step;
    const double change = f - f_new;
    f = f_new;
    if (t * step.norm() <= 1e-15 * (1.0 + z.norm()) || change <= 1e-32) break;
  }
  return std::sqrt(2.0 * f);
}

double Domain::boundary_distance(const Vec& x) const {
  if (x.size() != dim_) throw ParameterError("point dimension mismatch");
  double unsigned_dist = 0.0;
  switch (kind_) {
    case DomainKind::full_space: return kInf;
    case DomainKind::interval: return std::min(x(0) - a_, b_ - x(0));
    case DomainKind::ball:
      if (round_) {
        const double s = radius_ - (x - center_).norm();
        return exterior_ ? -s : s;
      }
      unsigned_dist = ellipsoid_distance(x);
      break;
    case DomainKind::half_space_graph:
      unsigned_dist = graph_distance(rotation_.transpose() * x);
      break;
  }
  return contains(x) ? unsigned_dist : -unsigned_dist;
}

Vec Domain::outward_normal(const Vec& x) const {
  switch (kind_) {
    case DomainKind::full_space: throw ContractError("no boundary: full space has no normal");
    case DomainKind::interval:
      return make_vec({std::abs(x(0) - a_) <= std::abs(x(0) - b_) ? -1.0 : 1.0});
    case DomainKind::ball: {
      Vec g = shape_inv_.transpose() * (shape_inv_ * (x - center_));
      const double len = g.norm();
      if (len == 0.0) throw DomainError("normal undefined at the center");
      g /= len;
      return exterior_ ? Vec(-g) : g;
    }
    case DomainKind::half_space_graph: {
      const Vec y = rotation_.transpose() * x;
      const int m = dim_ - 1;
      Vec ny(dim_);
      ny.head(m) = graph_.gradient(y.head(m));
      ny(m) = -1.0;
      ny /= ny.norm();
      return rotation_ * ny;
    }
  }
  return Vec();
}

void Domain::ray_crossings(const Vec& origin, const Vec& dir, double rmax,
                           std::vector<double>& out) const {
  auto keep = [&](double r) {
    if (r > 0.0 && r < rmax) out.push_back(r);
  };
  switch (kind_) {
    case DomainKind::full_space: return;
    case DomainKind::interval:
      if (dir(0) != 0.0) {
        keep((a_ - origin(0)) / dir(0));
        keep((b_ - origin(0)) / dir(0));
      }
      return;
    case DomainKind::ball: {
      const Vec p = shape_inv_ * (origin - center_), e = shape_inv_ * dir;
      const double qa = e.squaredNorm(), qb = p.dot(e), qc = p.squaredNorm() - radius_ * radius_;
      const double disc = qb * qb - qa * qc;
      if (disc <= 0.0) return;
      const double s = std::sqrt(disc);
      // Stable pair of roots of qa r^2 + 2 qb r + qc.
      const double t = -(qb + std::copysign(s, qb));
      double r1 = t / qa, r2 = qc / t;
      if (t == 0.0) r1 = r2 = 0.0;
      if (r1 > r2) std::swap(r1, r2);
      keep(r1);
      keep(r2);
      return;
    }
    case DomainKind::half_space_graph: {
      const Vec y = rotation_.transpose() * origin, e = rotation_.transpose() * dir;
      const int m = dim_ - 1;
      if (graph_.flat() || m == 0) {
        if (e(m) != 0.0) keep((graph_.value(y.head(m)) - y(m)) / e(m));
        return;
      }
      auto h = [&](double r) {
        const Vec z = y.head(m) + r * e.head(m);
        return y(m) + r * e(m) - graph_.value(z);
      };
      const int samples = 48 + static_cast<int>(std::ceil(16.0 * rmax / graph_.width));
      double r0 = 0.0, h0 = h(0.0);
      for (int k = 1; k <= samples; ++k) {
        const double r1 = rmax * k / samples;
        const double h1 = h(r1);
        if ((h0 < 0.0) != (h1 < 0.0) && h0 != 0.0) {
          if (h1 == 0.0) {
            keep(r1);
          } else {
            boost::uintmax_t iters = 200;
            const auto root = boost::math::tools::toms748_solve(
                h, r0, r1, h0, h1, boost::math::tools::eps_tolerance<double>(52), iters);
            keep(0.5 * (root.first + root.second));
          }
        }
        r0 = r1;
        h0 = h1;
      }
      return;
    }
  }
}

std::vector<Vec> Domain::boundary_samples(int count) const {
  if (!has_boundary()) throw ContractError("no boundary: full space has no boundary samples");
  if (count < 1) throw ParameterError("boundary sample count must be positive");
  std::vector<Vec> pts;
  switch (kind_) {
    case DomainKind::interval:
      return {make_vec({a_}), make_vec({b_})};
    case DomainKind::ball:
      if (dim_ == 1) {
        const double h = radius_ * shape_(0, 0);
        return {make_vec({center_(0) - h}), make_vec({center_(0) + h})};
      }
      if (dim_ == 2) {
        for (int k = 0; k < count; ++k) {
          const double t = 2.0 * M_PI * k / count;
          pts.push_back(center_ + radius_ * (shape_ * make_vec({std::cos(t), std::sin(t)})));
        }
      } else {
        const double golden = M_PI * (3.0 - std::sqrt(5.0));
        for (int k = 0; k < count; ++k) {
          const double z = 1.0 - (2.0 * k + 1.0) / count;
          const double s = std::sqrt(1.0 - z * z);
          pts.push_back(center_ + radius_ * (shape_ * make_vec({s * std::cos(golden * k),
                                                                s * std::sin(golden * k), z})));
        }
      }
      return pts;
    case DomainKind::half_space_graph: {
      const int m = dim_ - 1;
      auto lift = [&](const Vec& zp) {
        Vec y(dim_);
        y.head(m) = zp;
        y(m) = graph_.value(zp);
        return Vec(rotation_ * y);
      };
      if (m == 0) return {lift(Vec(0))};
      if (m == 1) {
        for (int k = 0; k < count; ++k) {
          const double t = count == 1 ? 0.0 : -5.0 + 10.0 * k / (count - 1);
          pts.push_back(lift(make_vec({graph_.center[0] + t})));
        }
        return pts;
      }
      const int side = std::max(2, static_cast<int>(std::ceil(std::sqrt(double(count)))));
      for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j) {
          const double u = -5.0 + 10.0 * i / (side - 1), v = -5.0 + 10.0 * j / (side - 1);
          pts.push_back(lift(make_vec({graph_.center[0] + u, graph_.center[1] + v})));
        }
      return pts;
    }
    default: break;
  }
  return pts;
}

std::pair<Vec, Vec> Domain::bounding_box() const {
  if (kind_ == DomainKind::interval) return {make_vec({a_}), make_vec({b_})};
  if (kind_ == DomainKind::ball && !exterior_) {
    Vec half(dim_);
    for (int i = 0; i < dim_; ++i) half(i) = radius_ * shape_.row(i).norm();
    return {center_ - half, center_ + half};
  }
  throw UnsupportedError("domain " + to_string(kind_) + " is unbounded");
}

nlohmann::json Domain::to_json() const {
  nlohmann::json j = {{"kind", to_string(kind_)}, {"dim", dim_}};
  switch (kind_) {
    case DomainKind::interval:
      j["a"] = a_;
      j["b"] = b_;
      break;
    case DomainKind::ball:
      j["center"] = nlj_vec(center_);
      j["radius"] = radius_;
      j["shape"] = mat_json(shape_);
      j["exterior"] = exterior_;
      break;
    case DomainKind::half_space_graph:
      j["amplitude"] = graph_.amplitude;
      j["width"] = graph_.width;
      j["center"] = std::vector<double>(graph_.center.begin(), graph_.center.begin() + dim_ - 1);
      j["rotation"] = mat_json(rotation_);
      j["graph_c1_norm"] = graph_.c1_norm();
      break;
    default: break;
  }
  return j;
}

}  // namespace nonloc
