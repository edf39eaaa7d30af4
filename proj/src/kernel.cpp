#include "nonloc/kernel.hpp"

#include <Eigen/Eigenvalues>

#include <random>
#include <sstream>

namespace nonloc {

namespace {

constexpr int kFitShells = 512;
constexpr int kFitDirections = 64;
constexpr double kFitInner = 1e-6;
constexpr double kFitMargin = 1.25;

double growth_decay(const DensitySpec& d, double r) {
  return d.compact() ? 1.0 : std::pow(1.0 + r, -d.big_n);
}

double value_bound(const DensitySpec& d, double r) {
  return std::pow(r, 2.0 - d.alpha - d.dim) * growth_decay(d, r);
}

double gradient_bound(const DensitySpec& d, double r) {
  return std::pow(r, 1.0 - d.alpha - d.dim) * growth_decay(d, r);
}

std::vector<double> log_shells(double inner, double outer, int count) {
  std::vector<double> radii(count);
  const double la = std::log(inner), lb = std::log(outer);
  for (int i = 0; i < count; ++i)
    radii[i] = std::exp(la + (lb - la) * (count == 1 ? 1.0 : double(i) / (count - 1)));
  return radii;
}

// Smallest c0, c1 (times a safety margin) that the shell samples admit.
void fit_growth_constants(DensitySpec& d) {
  double c0 = 0.0, c1 = 0.0;
  const std::vector<Vec> dirs = sample_directions(d.dim, kFitDirections);
  for (double r : log_shells(kFitInner, 1.0, kFitShells)) {
    const double b0 = value_bound(d, r), b1 = gradient_bound(d, r);
    for (const Vec& u : dirs) {
      const Vec x = r * u;
      c0 = std::max(c0, std::abs(d.eval(x)) / b0);
      c1 = std::max(c1, d.grad_eval(x).norm() / b1);
    }
  }
  d.c0 = std::max(kFitMargin * c0, 1e-12);
  d.c1 = std::max(kFitMargin * c1, 1e-12);
}

double radial_power(double r, int dim) { return dim == 1 ? 1.0 : (dim == 2 ? r : r * r); }

// omega_{n-1} * int_0^R profile(r) r^{n-1} dr
double radial_mass(int dim, double alpha, double radius, const std::function<double(double)>& f,
                   std::vector<double> breaks = {}) {
  QuadratureConfig cfg;
  cfg.rel_tol = 1e-14;
  cfg.abs_tol = 0.0;
  cfg.singularity_exponent = alpha;
  auto g = [&](double r) { return f(r) * radial_power(r, dim); };
  return sphere_measure(dim) * integrate_interval(g, 0.0, radius, cfg, breaks, true).value;
}

void require_dim(int dim) {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("dimension must be 1, 2 or 3");
}

}  // namespace

void validate_metadata(const DensitySpec& d) {
  require_dim(d.dim);
  if (!d.eval || !d.grad_eval) throw ParameterError("density evaluators are not set");
  if (!(d.alpha > 0.0 && d.alpha < 2.0))
    throw ParameterError("alpha must lie in (0, 2), got " + std::to_string(d.alpha));
  if (!(d.big_n > 3.0 - d.alpha))
    throw ParameterError("decay exponent N must exceed 3 - alpha");
  if (!(d.c0 > 0.0) || !(d.c1 > 0.0)) throw ParameterError("growth constants must be positive");
  if (!(d.support_radius > 0.0)) throw ParameterError("support radius must be positive");
}

double smooth_cutoff(double r, double a, double w) {
  const double t = (r - a) / w;
  if (t <= 0.0) return 1.0;
  if (t >= 1.0) return 0.0;
  const double f0 = std::exp(-1.0 / (1.0 - t)), f1 = std::exp(-1.0 / t);
  return f0 / (f0 + f1);
}

double smooth_cutoff_derivative(double r, double a, double w) {
  const double t = (r - a) / w;
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double u = 1.0 - t;
  const double fu = std::exp(-1.0 / u), ft = std::exp(-1.0 / t);
  const double dfu = fu / (u * u), dft = ft / (t * t);
  const double den = fu + ft;
  return -(dfu * ft + fu * dft) / (den * den) / w;
}

DensitySpec make_bump_density(const BumpOptions& opt) {
  require_dim(opt.dim);
  const int n = opt.dim;
  const double alpha = opt.alpha;
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("alpha must lie in (0, 2)");
  const double power = 2.0 - alpha - n;
  if (!opt.singular && power > 0.0)
    throw ParameterError("a bounded density needs alpha >= 2 - n");
  const double mass = opt.mass < 0.0 ? 2.0 * n : opt.mass;
  if (!(mass > 0.0)) throw ParameterError("mass must be positive");
  const bool singular = opt.singular;

  auto profile = [singular, power](double r) {
    if (r >= 1.0) return 0.0;
    const double b = std::exp(-1.0 / (1.0 - r * r));
    return singular ? b * std::pow(r, power) : b;
  };
  const double kappa = mass / radial_mass(n, alpha, 1.0, profile);

  DensitySpec d;
  d.dim = n;
  d.kind = "bump";
  d.alpha = alpha;
  d.big_n = opt.big_n;
  d.support_radius = 1.0;
  d.is_radial = true;
  d.params = {{"mass", mass}, {"singular", singular}, {"kappa", kappa}};
  d.eval = [=](const Vec& x) {
    const double q = x.squaredNorm();
    if (q >= 1.0) return 0.0;
    const double b = kappa * std::exp(-1.0 / (1.0 - q));
    return singular ? b * std::pow(q, 0.5 * power) : b;
  };
  d.grad_eval = [=](const Vec& x) -> Vec {
    const double q = x.squaredNorm();
    if (q >= 1.0) return Vec::Zero(x.size());
    const double s = 1.0 - q;
    double b = kappa * std::exp(-1.0 / s);
    double coeff = -2.0 / (s * s);
    if (singular) {
      b *= std::pow(q, 0.5 * power);
      coeff += power / q;
    }
    return (b * coeff) * x;
  };
  validate_metadata(d);
  fit_growth_constants(d);
  return d;
}

DensitySpec make_polynomial_density(int dim, int k, double mass, double alpha) {
  require_dim(dim);
  if (k < 2) throw ParameterError("polynomial exponent must be at least 2");
  if (!(alpha > 0.0 && alpha < 2.0)) throw ParameterError("alpha must lie in (0, 2)");
  if (2.0 - alpha - dim > 0.0) throw ParameterError("a bounded density needs alpha >= 2 - n");
  mass = mass < 0.0 ? 2.0 * dim : mass;
  if (!(mass > 0.0)) throw ParameterError("mass must be positive");
  auto profile = [k](double r) { return r >= 1.0 ? 0.0 : std::pow(1.0 - r * r, k); };
  const double kappa = mass / radial_mass(dim, alpha, 1.0, profile);

  DensitySpec d;
  d.dim = dim;
  d.kind = "polynomial";
  d.alpha = alpha;
  d.big_n = 4.0;
  d.support_radius = 1.0;
  d.is_radial = true;
  d.params = {{"mass", mass}, {"k", k}, {"kappa", kappa}};
  d.eval = [=](const Vec& x) {
    const double q = x.squaredNorm();
    return q >= 1.0 ? 0.0 : kappa * std::pow(1.0 - q, k);
  };
  d.grad_eval = [=](const Vec& x) -> Vec {
    const double q = x.squaredNorm();
    if (q >= 1.0) return Vec::Zero(x.size());
    return (-2.0 * k * kappa * std::pow(1.0 - q, k - 1)) * x;
  };
  validate_metadata(d);
  fit_growth_constants(d);
  return d;
}

DensitySpec make_fractional_density(int dim, double s, double cutoff_radius,
                                    double transition_width) {
  require_dim(dim);
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("s must lie in (0, 1)");
  if (!(cutoff_radius > 0.0) || !(transition_width > 0.0))
    throw ParameterError("cutoff radius and transition width must be positive");
  const double power = 2.0 - dim - 2.0 * s;
  const double a = cutoff_radius, w = transition_width;

  DensitySpec d;
  d.dim = dim;
  d.kind = "fractional";
  d.alpha = 2.0 * s;
  d.big_n = 5.0 - 2.0 * s;
  d.support_radius = a + w;
  d.is_radial = true;
  d.params = {{"s", s}, {"cutoff_radius", a}, {"transition_width", w}};
  d.eval = [=](const Vec& x) {
    const double r = x.norm();
    if (r >= a + w) return 0.0;
    return std::pow(r, power) * smooth_cutoff(r, a, w);
  };
  d.grad_eval = [=](const Vec& x) -> Vec {
    const double r = x.norm();
    if (r >= a + w || r == 0.0) return Vec::Zero(x.size());
    const double rp = std::pow(r, power);
    const double dr = power * rp / r * smooth_cutoff(r, a, w) + rp * smooth_cutoff_derivative(r, a, w);
    return (dr / r) * x;
  };
  d.ray_breaks = [a](const Vec&, std::vector<double>& out) { out.push_back(a); };
  validate_metadata(d);
  fit_growth_constants(d);
  return d;
}

DensitySpec make_anisotropic_density(const DensitySpec& base, const Mat& b) {
  validate_metadata(base);
  const int n = base.dim;
  if (!base.is_radial) throw ParameterError("anisotropic construction needs a radial base density");
  if (b.rows() != n || b.cols() != n) throw ParameterError("B must be n x n");
  if (asymmetry(b) > 1e-12 * std::max(1.0, max_abs(b))) throw ParameterError("B must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(b);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
    throw ParameterError("B must be positive definite");
  if (std::abs(b.determinant() - 1.0) > 1e-10) throw ParameterError("B must have determinant 1");

  auto base_ptr = std::make_shared<const DensitySpec>(base);
  const Mat bm = b;
  const Mat b2 = b * b;

  DensitySpec d;
  d.dim = n;
  d.kind = "anisotropic";
  d.alpha = base.alpha;
  d.big_n = base.big_n;
  d.support_radius = base.support_radius / eig.eigenvalues().minCoeff();
  d.is_radial = (b - identity(n)).cwiseAbs().maxCoeff() == 0.0;
  nlohmann::json bj = nlohmann::json::array();
  for (int i = 0; i < n; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < n; ++j) row.push_back(b(i, j));
    bj.push_back(row);
  }
  d.params = {{"base", to_json(base)}, {"b_matrix", bj}};
  d.eval = [base_ptr, bm](const Vec& x) {
    const Vec y = bm * x;
    const double by = y.squaredNorm();
    if (by == 0.0) return base_ptr->eval(y);
    return base_ptr->eval(y) * x.squaredNorm() / by;
  };
  d.grad_eval = [base_ptr, bm, b2](const Vec& x) -> Vec {
    const Vec y = bm * x;
    const double by = y.squaredNorm();
    if (by == 0.0) return Vec::Zero(x.size());
    const double q = x.squaredNorm() / by;
    const Vec dq = (2.0 / by) * x - (2.0 * q / by) * (b2 * x);
    return q * (bm * base_ptr->grad_eval(y)) + base_ptr->eval(y) * dq;
  };
  d.ray_extent = [base_ptr, bm](const Vec& dir) {
    const Vec y = bm * dir;
    const double len = y.norm();
    return base_ptr->extent_along(y / len) / len;
  };
  d.ray_breaks = [base_ptr, bm](const Vec& dir, std::vector<double>& out) {
    if (!base_ptr->ray_breaks) return;
    const Vec y = bm * dir;
    const double len = y.norm();
    std::vector<double> local;
    base_ptr->ray_breaks(y / len, local);
    for (double r : local) out.push_back(r / len);
  };
  validate_metadata(d);
  fit_growth_constants(d);
  return d;
}

DensitySpec make_shifted_density(const DensitySpec& base, const Vec& shift) {
  validate_metadata(base);
  if (shift.size() != base.dim) throw ParameterError("shift dimension mismatch");
  auto base_ptr = std::make_shared<const DensitySpec>(base);
  const Vec s = shift;
  DensitySpec d;
  d.dim = base.dim;
  d.kind = "shifted";
  d.alpha = base.alpha;
  d.big_n = base.big_n;
  d.c0 = base.c0;
  d.c1 = base.c1;
  d.support_radius = base.support_radius + s.norm();
  d.is_radial = false;
  d.is_even = false;
  d.params = {{"base", to_json(base)}, {"shift", std::vector<double>(s.data(), s.data() + s.size())}};
  d.eval = [base_ptr, s](const Vec& x) { return base_ptr->eval(x - s); };
  d.grad_eval = [base_ptr, s](const Vec& x) -> Vec { return base_ptr->grad_eval(x - s); };
  validate_metadata(d);
  return d;
}

DensitySpec make_custom_density(int dim, std::function<double(const Vec&)> eval,
                                std::function<Vec(const Vec&)> grad, double alpha,
                                double big_n, double c0, double c1, double support_radius,
                                bool is_radial) {
  DensitySpec d;
  d.dim = dim;
  d.kind = "custom";
  d.eval = std::move(eval);
  d.grad_eval = std::move(grad);
  d.alpha = alpha;
  d.big_n = big_n;
  d.c0 = c0;
  d.c1 = c1;
  d.support_radius = support_radius;
  d.is_radial = is_radial;
  validate_metadata(d);
  return d;
}

KernelFamily::KernelFamily(DensitySpec density, double epsilon)
    : density_(std::make_shared<const DensitySpec>(std::move(density))), epsilon_(epsilon) {
  validate_metadata(*density_);
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw ParameterError("epsilon must be positive");
  inv_scale_ = std::pow(epsilon, -density_->dim);
}

double KernelFamily::kernel(const Vec& x) const {
  const double q = x.squaredNorm();
  if (q == 0.0) throw DomainError("kernel is singular at the origin");
  return scaled_density(x) / q;
}

RayGeometry KernelFamily::geometry() const {
  RayGeometry g;
  g.scale = epsilon_;
  auto d = density_;
  const double eps = epsilon_;
  if (d->compact()) g.extent = [d, eps](const Vec& dir) { return eps * d->extent_along(dir); };
  if (d->ray_breaks)
    g.breaks = [d, eps](const Vec& dir, std::vector<double>& out) {
      std::vector<double> local;
      d->ray_breaks(dir, local);
      for (double r : local) out.push_back(eps * r);
    };
  return g;
}

double eval_scaled_density(const KernelFamily& family, const Vec& x) {
  return family.scaled_density(x);
}

double eval_scaled_kernel(const KernelFamily& family, const Vec& x) { return family.kernel(x); }

QuadratureConfig config_for(const DensitySpec& d, QuadratureConfig base) {
  base.singularity_exponent = d.alpha;
  return base;
}

QuadResult scaled_mass(const KernelFamily& family, const QuadratureConfig& cfg) {
  const QuadratureConfig c = config_for(family.density(), cfg);
  return integrate_singular(
      family.dim(), [&](const Vec& x) { return family.scaled_density(x); }, c, family.geometry());
}

CertificationRecord check_integrability(const DensitySpec& d, const QuadratureConfig& base_cfg) {
  validate_metadata(d);
  QuadratureConfig cfg = config_for(d, base_cfg);
  CertificationRecord rec;
  rec.check = "integrability";
  auto weighted = [&d](const Vec& x) { return d.eval(x) * (1.0 + x.norm()); };

  // Dyadic shell masses toward the origin must decay geometrically; for an
  // r^{1-alpha} profile the ratio is 2^{alpha-2} < 1.
  constexpr int kShells = 30, kTail = 10;
  std::vector<double> shells;
  for (int k = 0; k < kShells; ++k) {
    const double r1 = std::ldexp(1.0, -k), r0 = 0.5 * r1;
    QuadratureConfig sc = cfg;
    sc.far_truncation.reset();
    sc.abs_tol = 0.0;
    sc.rel_tol = 1e-6;
    shells.push_back(integrate_annulus(d.dim, weighted, r0, r1, sc).value);
  }
  double worst = 0.0;
  for (int k = kShells - kTail; k < kShells; ++k)
    worst = std::max(worst, shells[k] / std::max(shells[k - 1], 1e-300));
  rec.worst_ratio = worst;
  if (shells[kShells - 1] > 0.0 && worst > 0.985) {
    rec.pass = false;
    rec.value = kInf;
    std::ostringstream os;
    os << "near-origin shell masses do not decay (ratio " << worst
       << "), behavior of a singularity with alpha >= 2";
    rec.detail = os.str();
    return rec;
  }

  RayGeometry geom;
  geom.breaks = d.ray_breaks;
  double tail = 0.0;
  if (d.compact()) {
    geom.extent = [&d](const Vec& dir) { return d.extent_along(dir); };
  } else {
    const double r_t = cfg.far_truncation.value_or(100.0);
    cfg.far_truncation = r_t;
    QuadratureConfig tc = cfg;
    tc.far_truncation = 2.0 * r_t;
    tail = integrate_annulus(d.dim, weighted, r_t, 2.0 * r_t, tc).value;
  }
  const QuadResult total = integrate_singular(d.dim, weighted, cfg, geom);
  rec.value = total.value;
  const bool finite = std::isfinite(total.value);
  const bool tail_ok = tail <= 1e-6 * std::abs(total.value);
  rec.pass = finite && tail_ok;
  std::ostringstream os;
  os << "integral of rho(1+|x|) = " << total.value << " (est " << total.error_estimate
     << "), tail estimate " << tail << ", near-origin shell ratio " << worst;
  rec.detail = os.str();
  return rec;
}

CertificationRecord check_growth_bounds(const DensitySpec& d, int sample_count) {
  validate_metadata(d);
  if (sample_count < 1) throw ParameterError("sample_count must be positive");
  CertificationRecord rec;
  rec.check = "growth_bounds";
  const std::vector<Vec> dirs = sample_directions(d.dim, 32);
  double worst = 0.0;
  std::string where;
  for (double r : log_shells(1e-8, 1.0, sample_count)) {
    const double b0 = d.c0 * value_bound(d, r), b1 = d.c1 * gradient_bound(d, r);
    for (const Vec& u : dirs) {
      const Vec x = r * u;
      const double v = std::abs(d.eval(x)) / b0;
      const double g = d.grad_eval(x).norm() / b1;
      const double ratio = std::isfinite(v) && std::isfinite(g) ? std::max(v, g) : kInf;
      if (ratio > worst) {
        worst = ratio;
        std::ostringstream os;
        os << (v >= g ? "value" : "gradient") << " bound at |x| = " << r;
        where = os.str();
      }
    }
  }
  rec.worst_ratio = worst;
  rec.value = worst;
  rec.pass = worst <= 1.0;
  rec.detail = std::string(d.compact() ? "compact-support form; " : "decaying form; ") +
               "worst ratio " + std::to_string(worst) + " (" + where + ")";
  return rec;
}

CertificationRecord check_evenness(const DensitySpec& d, int sample_count, unsigned seed) {
  validate_metadata(d);
  CertificationRecord rec;
  rec.check = "evenness";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double span = d.compact() ? d.support_radius : 4.0;
  double worst = 0.0;
  for (int i = 0; i < sample_count; ++i) {
    Vec x(d.dim);
    for (int k = 0; k < d.dim; ++k) x(k) = span * unit(rng);
    const double a = d.eval(x), b = d.eval(-x);
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    worst = std::max(worst, std::abs(a - b) / scale);
  }
  rec.worst_ratio = worst;
  rec.value = worst;
  rec.pass = worst <= 1e-12;
  rec.detail = std::to_string(sample_count) + " random pairs, worst relative gap " +
               std::to_string(worst);
  return rec;
}

std::vector<TailMass> check_dirac_property(const DensitySpec& d, double delta,
                                           const std::vector<double>& epsilons,
                                           const QuadratureConfig& cfg) {
  if (!(delta >= 0.0)) throw ParameterError("delta must be nonnegative");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw ParameterError("epsilons must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1]))
      throw ParameterError("epsilons must be strictly decreasing");
  }
  std::vector<TailMass> out;
  for (double eps : epsilons) {
    KernelFamily fam(d, eps);
    TailMass t;
    t.epsilon = eps;
    if (d.compact() && delta >= fam.support_radius()) {
      out.push_back(t);
      continue;
    }
    QuadResult r;
    if (delta == 0.0) {
      r = scaled_mass(fam, cfg);
    } else {
      r = integrate_annulus(
          d.dim, [&](const Vec& x) { return fam.scaled_density(x); }, delta, kInf,
          config_for(d, cfg), fam.geometry());
    }
    t.mass = r.value;
    t.error_estimate = r.error_estimate;
    out.push_back(t);
  }
  return out;
}

std::vector<Vec> sample_directions(int dim, int count) {
  require_dim(dim);
  std::vector<Vec> dirs;
  if (dim == 1) return {make_vec({1.0}), make_vec({-1.0})};
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double t = 2.0 * M_PI * (k + 0.5) / count;
      dirs.push_back(make_vec({std::cos(t), std::sin(t)}));
    }
    return dirs;
  }
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  for (int k = 0; k < count; ++k) {
    const double z = 1.0 - (2.0 * k + 1.0) / count;
    const double s = std::sqrt(1.0 - z * z);
    dirs.push_back(make_vec({s * std::cos(golden * k), s * std::sin(golden * k), z}));
  }
  return dirs;
}

nlohmann::json to_json(const CertificationRecord& r) {
  return {{"check", r.check},
          {"pass", r.pass},
          {"worst_ratio", std::isfinite(r.worst_ratio) ? nlohmann::json(r.worst_ratio) : nlohmann::json()},
          {"value", std::isfinite(r.value) ? nlohmann::json(r.value) : nlohmann::json()},
          {"detail", r.detail}};
}

nlohmann::json to_json(const DensitySpec& d) {
  nlohmann::json j = {{"kind", d.kind},         {"dim", d.dim},   {"alpha", d.alpha},
                      {"big_n", d.big_n},       {"c0", d.c0},     {"c1", d.c1},
                      {"is_radial", d.is_radial}, {"is_even", d.is_even}};
  j["support_radius"] = d.compact() ? nlohmann::json(d.support_radius) : nlohmann::json();
  j["params"] = d.params;
  return j;
}

}  // namespace nonloc
