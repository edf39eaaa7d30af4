#pragma once

// Geometry of the region Omega: full space, interval, (ellipsoidal) ball or
// the rotated half-space above a graph. Boundary distance is signed and
// positive inside.

#include "nonloc/errors.hpp"
#include "nonloc/jet.hpp"
#include "nonloc/linalg.hpp"
#include "nonloc/quadrature.hpp"

#include <json.hpp>

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace nonloc {

enum class DomainKind { full_space, half_space_graph, interval, ball };

std::string to_string(DomainKind k);

// gamma(x') = amplitude * exp(-|x' - center|^2 / width^2)
struct GraphFunction {
  int tangent_dim = 1;
  double amplitude = 0.0;
  double width = 1.0;
  std::array<double, 2> center{};

  template <class T>
  T operator()(const T* yp) const {
    using std::exp;
    T q = square(yp[0] - center[0]);
    if (tangent_dim > 1) q = q + square(yp[1] - center[1]);
    return amplitude * exp(q * (-1.0 / (width * width)));
  }

  bool flat() const { return amplitude == 0.0; }
  double value(const Vec& yp) const;
  Vec gradient(const Vec& yp) const;
  Mat hessian(const Vec& yp) const;
  // sup |gamma| + sup |grad gamma|
  double c1_norm() const;
};

class Domain : public Region {
 public:
  static Domain full_space(int dim);
  static Domain interval(double a, double b);
  // {x : |S^{-1}(x - center)| < radius}, or its complement when exterior.
  static Domain ball(const Vec& center, double radius, const Mat& shape = Mat(),
                     bool exterior = false);
  // Q {y : y_n > gamma(y')}.
  static Domain half_space_graph(int dim, const GraphFunction& graph, const Mat& rotation = Mat());

  DomainKind kind() const { return kind_; }
  int dim() const override { return dim_; }
  bool has_boundary() const { return kind_ != DomainKind::full_space; }
  bool bounded() const {
    return kind_ == DomainKind::interval || (kind_ == DomainKind::ball && !exterior_);
  }

  bool contains(const Vec& x) const override;
  double boundary_distance(const Vec& x) const;
  Vec outward_normal(const Vec& x) const;
  void ray_crossings(const Vec& origin, const Vec& dir, double rmax,
                     std::vector<double>& out) const override;
  // Deterministic boundary points: interval endpoints, equispaced ball
  // angles, a uniform graph grid over |x' - center| <= 5.
  std::vector<Vec> boundary_samples(int count) const;
  // Throws UnsupportedError for unbounded domains.
  std::pair<Vec, Vec> bounding_box() const;

  // Interval and ball accessors.
  double lower() const { return a_; }
  double upper() const { return b_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const Mat& shape() const { return shape_; }
  bool exterior() const { return exterior_; }
  // Half-space accessors: y = Q^T x is the graph frame.
  const GraphFunction& graph() const { return graph_; }
  const Mat& rotation() const { return rotation_; }

  nlohmann::json to_json() const;

 private:
  Domain() = default;
  double ellipsoid_distance(const Vec& x) const;
  double graph_distance(const Vec& y) const;

  DomainKind kind_ = DomainKind::full_space;
  int dim_ = 1;
  double a_ = 0.0, b_ = 1.0;
  Vec center_;
  double radius_ = 1.0;
  Mat shape_, shape_inv_;
  bool round_ = true;
  bool exterior_ = false;
  GraphFunction graph_;
  Mat rotation_;
};

}  // namespace nonloc
