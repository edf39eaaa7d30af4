#include "nonloc/config.hpp"

#include "nonloc/errors.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace nonloc {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw SchemaError("unknown key '" + key + "' in " + where);
  }
}

double number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw SchemaError(where + "." + key + " is required");
  const json& v = j.at(key);
  if (!v.is_number()) throw SchemaError(where + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw SchemaError(where + "." + key + " must be finite");
  return x;
}

double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? number(j, key, where) : fallback;
}

int integer_or(const json& j, const std::string& key, int fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw SchemaError(where + "." + key + " must be an integer");
  return v.get<int>();
}

bool boolean_or(const json& j, const std::string& key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw SchemaError(where + "." + key + " must be a boolean");
  return j.at(key).get<bool>();
}

std::vector<double> numbers(const json& v, const std::string& where) {
  if (!v.is_array()) throw SchemaError(where + " must be an array of numbers");
  std::vector<double> out;
  for (const json& x : v) {
    if (!x.is_number()) throw SchemaError(where + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Vec vector_of(const json& v, const std::string& where) {
  const std::vector<double> xs = numbers(v, where);
  if (xs.empty() || xs.size() > static_cast<std::size_t>(kMaxDim))
    throw SchemaError(where + " must have 1 to 3 entries");
  Vec out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) out(static_cast<Eigen::Index>(i)) = xs[i];
  return out;
}

Mat matrix_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty() || v.size() > static_cast<std::size_t>(kMaxDim))
    throw SchemaError(where + " must be a square matrix (array of rows)");
  const auto n = static_cast<Eigen::Index>(v.size());
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::vector<double> row = numbers(v[static_cast<std::size_t>(i)], where);
    if (static_cast<Eigen::Index>(row.size()) != n) throw SchemaError(where + " must be square");
    for (Eigen::Index k = 0; k < n; ++k) m(i, k) = row[static_cast<std::size_t>(k)];
  }
  return m;
}

double alpha_field(const json& j, const std::string& where) {
  const double alpha = number_or(j, "alpha", 1.0, where);
  if (!(alpha > 0.0 && alpha < 2.0)) {
    std::ostringstream msg;
    msg << where << ".alpha = " << alpha << " is outside (0, 2)";
    throw SchemaError(msg.str());
  }
  return alpha;
}

int dim_field(const json& j, int fallback, const std::string& where) {
  const int dim = integer_or(j, "dim", fallback, where);
  if (dim < 1 || dim > kMaxDim) throw SchemaError(where + ".dim must be 1, 2 or 3");
  return dim;
}

std::string kind_of(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string())
    throw SchemaError(where + ".kind is required");
  return j.at("kind").get<std::string>();
}

DensitySpec build_density(const json& j, const std::string& where) {
  const std::string kind = kind_of(j, where);
  if (kind == "bump") {
    check_keys(j, {"kind", "dim", "mass", "alpha", "N", "singular"}, where);
    BumpOptions o;
    o.dim = dim_field(j, 1, where);
    o.mass = number_or(j, "mass", -1.0, where);
    o.alpha = alpha_field(j, where);
    o.big_n = number_or(j, "N", 4.0, where);
    o.singular = boolean_or(j, "singular", false, where);
    return make_bump_density(o);
  }
  if (kind == "polynomial") {
    check_keys(j, {"kind", "dim", "k", "mass", "alpha"}, where);
    return make_polynomial_density(dim_field(j, 1, where), integer_or(j, "k", 2, where),
                                   number_or(j, "mass", -1.0, where), alpha_field(j, where));
  }
  if (kind == "fractional") {
    check_keys(j, {"kind", "dim", "s", "cutoff_radius", "transition_width"}, where);
    const double s = number(j, "s", where);
    if (!(s > 0.0 && s < 1.0)) throw SchemaError(where + ".s must lie in (0, 1), i.e. alpha = 2s in (0, 2)");
    return make_fractional_density(dim_field(j, 1, where), s, number_or(j, "cutoff_radius", 1.0, where),
                                   number_or(j, "transition_width", 1.0, where));
  }
  if (kind == "anisotropic") {
    check_keys(j, {"kind", "base", "b"}, where);
    if (!j.contains("base") || !j.contains("b")) throw SchemaError(where + " needs base and b");
    return make_anisotropic_density(build_density(j.at("base"), where + ".base"),
                                    matrix_of(j.at("b"), where + ".b"));
  }
  if (kind == "shifted") {
    check_keys(j, {"kind", "base", "shift"}, where);
    if (!j.contains("base") || !j.contains("shift")) throw SchemaError(where + " needs base and shift");
    return make_shifted_density(build_density(j.at("base"), where + ".base"),
                                vector_of(j.at("shift"), where + ".shift"));
  }
  throw SchemaError("unknown density kind '" + kind + "'");
}

std::vector<double> epsilon_ladder(const json& v, const std::string& where) {
  std::vector<double> eps = numbers(v, where);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0.0 && std::isfinite(eps[i]))) throw SchemaError(where + " entries must be positive");
    if (i > 0 && !(eps[i] < eps[i - 1])) throw SchemaError(where + " must be strictly decreasing");
  }
  return eps;
}

}  // namespace

DensitySpec density_from_json(const json& j) {
  try {
    return build_density(j, "density");
  } catch (const ParameterError& e) {
    throw SchemaError(std::string("density: ") + e.what());
  } catch (const DomainError& e) {
    throw SchemaError(std::string("density: ") + e.what());
  }
}

Domain domain_from_json(const json& j, int default_dim) {
  const std::string where = "domain";
  const std::string kind = kind_of(j, where);
  try {
    if (kind == "full_space") {
      check_keys(j, {"kind", "dim"}, where);
      return Domain::full_space(dim_field(j, default_dim, where));
    }
    if (kind == "interval") {
      check_keys(j, {"kind", "a", "b"}, where);
      return Domain::interval(number_or(j, "a", 0.0, where), number_or(j, "b", 1.0, where));
    }
    if (kind == "ball") {
      check_keys(j, {"kind", "center", "radius", "shape", "exterior"}, where);
      const Vec c = j.contains("center") ? vector_of(j.at("center"), where + ".center") : zeros(default_dim);
      const Mat shape = j.contains("shape") ? matrix_of(j.at("shape"), where + ".shape") : Mat();
      return Domain::ball(c, number_or(j, "radius", 1.0, where), shape,
                          boolean_or(j, "exterior", false, where));
    }
    if (kind == "half_space_graph") {
      check_keys(j, {"kind", "dim", "amplitude", "width", "center", "rotation"}, where);
      const int dim = dim_field(j, default_dim, where);
      if (dim < 2) throw SchemaError("domain.dim must be 2 or 3 for a half-space");
      GraphFunction g;
      g.amplitude = number_or(j, "amplitude", 0.0, where);
      g.width = number_or(j, "width", 1.0, where);
      if (j.contains("center")) {
        const std::vector<double> c = numbers(j.at("center"), where + ".center");
        if (static_cast<int>(c.size()) != dim - 1) throw SchemaError("domain.center must have dim - 1 entries");
        for (std::size_t i = 0; i < c.size(); ++i) g.center[i] = c[i];
      }
      const Mat q = j.contains("rotation") ? matrix_of(j.at("rotation"), where + ".rotation") : Mat();
      return Domain::half_space_graph(dim, g, q);
    }
  } catch (const ParameterError& e) {
    throw SchemaError(std::string("domain: ") + e.what());
  }
  throw SchemaError("unknown domain kind '" + kind + "'");
}

QuadratureConfig quadrature_from_json(const json& j) {
  const std::string where = "quadrature";
  check_keys(j, {"near_split_factor", "radial_nodes", "angular_nodes", "far_truncation", "rel_tol", "abs_tol",
                 "radial_panels", "grading_ratio", "grading_levels", "taylor_radius", "max_refinements"},
             where);
  QuadratureConfig c;
  c.near_split_factor = number_or(j, "near_split_factor", c.near_split_factor, where);
  c.radial_nodes = integer_or(j, "radial_nodes", c.radial_nodes, where);
  c.angular_nodes = integer_or(j, "angular_nodes", c.angular_nodes, where);
  if (j.contains("far_truncation")) {
    const json& f = j.at("far_truncation");
    if (f.is_string() && f.get<std::string>() == "support") {
      c.far_truncation.reset();
    } else if (f.is_number()) {
      c.far_truncation = f.get<double>();
    } else {
      throw SchemaError("quadrature.far_truncation must be a radius or \"support\"");
    }
  }
  c.rel_tol = number_or(j, "rel_tol", c.rel_tol, where);
  c.abs_tol = number_or(j, "abs_tol", c.abs_tol, where);
  c.radial_panels = integer_or(j, "radial_panels", c.radial_panels, where);
  c.grading_ratio = number_or(j, "grading_ratio", c.grading_ratio, where);
  c.grading_levels = integer_or(j, "grading_levels", c.grading_levels, where);
  c.taylor_radius = number_or(j, "taylor_radius", c.taylor_radius, where);
  c.max_refinements = integer_or(j, "max_refinements", c.max_refinements, where);
  try {
    c.validate();
  } catch (const ParameterError& e) {
    throw SchemaError(std::string("quadrature: ") + e.what());
  }
  return c;
}

TestFunction test_function_from_json(const json& j, const Domain& domain, const Mat& m) {
  const std::string where = "test_function";
  check_keys(j, {"recipe", "params", "compatible"}, where);
  if (!j.contains("recipe") || !j.at("recipe").is_string()) throw SchemaError("test_function.recipe is required");
  const std::string recipe = j.at("recipe").get<std::string>();
  const json params = j.contains("params") ? j.at("params") : json::object();
  if (!params.is_object()) throw SchemaError("test_function.params must be an object");
  const bool compatible = boolean_or(j, "compatible", true, where);
  try {
    if (compatible) return make_compatible_function(domain, m, recipe, params);
    return make_recipe_function(domain.dim(), recipe, params);
  } catch (const ParameterError& e) {
    throw SchemaError(std::string("test_function: ") + e.what());
  }
}

RunConfig parse_run_config(const json& j) {
  check_keys(j, {"name", "density", "domain", "test_function", "p_values", "epsilons", "grid", "quadrature",
                 "checks", "apply", "profile"},
             "config");
  RunConfig rc;
  rc.raw = j;
  if (!j.contains("density")) throw SchemaError("config.density is required");
  rc.density = density_from_json(j.at("density"));
  const int dim = rc.density.dim;
  if (j.contains("domain")) {
    rc.domain = domain_from_json(j.at("domain"), dim);
    if (rc.domain.dim() != dim) throw SchemaError("domain and density dimensions differ");
  } else {
    rc.domain = Domain::full_space(dim);
  }
  if (j.contains("test_function")) {
    rc.test_function = j.at("test_function");
    check_keys(rc.test_function, {"recipe", "params", "compatible"}, "test_function");
  }
  if (j.contains("p_values")) {
    rc.p_values = numbers(j.at("p_values"), "p_values");
    for (double p : rc.p_values)
      if (!(p >= 1.0 && std::isfinite(p))) throw SchemaError("p_values entries must be finite and >= 1");
  }
  if (j.contains("epsilons")) rc.epsilons = epsilon_ladder(j.at("epsilons"), "epsilons");
  if (j.contains("grid")) {
    check_keys(j.at("grid"), {"resolution"}, "grid");
    rc.grid_resolution = integer_or(j.at("grid"), "resolution", 0, "grid");
    if (rc.grid_resolution < 0) throw SchemaError("grid.resolution must be positive");
  }
  if (j.contains("quadrature")) rc.quadrature = quadrature_from_json(j.at("quadrature"));
  if (j.contains("checks")) {
    const json& c = j.at("checks");
    check_keys(c, {"delta", "dirac_epsilons", "mass_epsilons", "growth_samples", "evenness_samples"}, "checks");
    rc.checks.delta = number_or(c, "delta", rc.checks.delta, "checks");
    if (!(rc.checks.delta > 0.0)) throw SchemaError("checks.delta must be positive");
    if (c.contains("dirac_epsilons"))
      rc.checks.dirac_epsilons = epsilon_ladder(c.at("dirac_epsilons"), "checks.dirac_epsilons");
    if (c.contains("mass_epsilons"))
      rc.checks.mass_epsilons = epsilon_ladder(c.at("mass_epsilons"), "checks.mass_epsilons");
    rc.checks.growth_samples = integer_or(c, "growth_samples", rc.checks.growth_samples, "checks");
    rc.checks.evenness_samples = integer_or(c, "evenness_samples", rc.checks.evenness_samples, "checks");
    if (rc.checks.growth_samples < 1 || rc.checks.evenness_samples < 1)
      throw SchemaError("checks sample counts must be positive");
  }
  if (j.contains("apply")) {
    const json& a = j.at("apply");
    check_keys(a, {"x", "epsilon", "route"}, "apply");
    if (a.contains("x")) rc.apply.x = vector_of(a.at("x"), "apply.x");
    if (a.contains("epsilon")) rc.apply.epsilon = number(a, "epsilon", "apply");
    if (a.contains("route")) {
      if (!a.at("route").is_string()) throw SchemaError("apply.route must be a string");
      try {
        rc.apply.route = route_from_string(a.at("route").get<std::string>());
      } catch (const ParameterError& e) {
        throw SchemaError(std::string("apply.route: ") + e.what());
      }
    }
  }
  if (j.contains("profile")) {
    const json& p = j.at("profile");
    check_keys(p, {"epsilon", "from", "to", "points"}, "profile");
    if (p.contains("epsilon")) rc.profile.epsilon = number(p, "epsilon", "profile");
    if (p.contains("from")) rc.profile.from = vector_of(p.at("from"), "profile.from");
    if (p.contains("to")) rc.profile.to = vector_of(p.at("to"), "profile.to");
    rc.profile.points = integer_or(p, "points", rc.profile.points, "profile");
    if (rc.profile.points < 2) throw SchemaError("profile.points must be at least 2");
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("malformed JSON in ") + path + ": " + e.what());
  }
  return parse_run_config(j);
}

}  // namespace nonloc
