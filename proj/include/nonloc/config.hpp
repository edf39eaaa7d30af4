#pragma once

// JSON run configuration shared by the CLI subcommands. Every object is
// checked for unknown keys; violations raise SchemaError.
//
//   density        {"kind": "bump" | "polynomial" | "fractional" | "anisotropic" | "shifted", ...}
//   domain         {"kind": "full_space" | "interval" | "ball" | "half_space_graph", ...}
//   test_function  {"recipe": name, "params": {...}, "compatible": true}
//   p_values, epsilons, grid {"resolution": n}, quadrature {...}
//   checks         kernel-check options
//   apply          {"x": [...], "epsilon": e, "route": name}
//   profile        {"epsilon": e, "from": [...], "to": [...], "points": k}

#include "nonloc/domain.hpp"
#include "nonloc/kernel.hpp"
#include "nonloc/operators.hpp"
#include "nonloc/test_function.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace nonloc {

struct KernelCheckOptions {
  double delta = 0.5;
  std::vector<double> dirac_epsilons{0.4, 0.2, 0.1};
  std::vector<double> mass_epsilons{1.0, 0.5, 0.1};
  int growth_samples = 512;
  int evenness_samples = 1000;
};

struct ApplyOptions {
  std::optional<Vec> x;
  std::optional<double> epsilon;
  Route route = Route::complement_decomposition;
};

struct ProfileOptions {
  std::optional<double> epsilon;
  std::optional<Vec> from, to;
  int points = 32;
};

struct RunConfig {
  nlohmann::json raw;
  DensitySpec density;
  Domain domain = Domain::full_space(1);
  nlohmann::json test_function;  // empty when absent
  std::vector<double> p_values;
  std::vector<double> epsilons;
  int grid_resolution = 0;  // 0 selects the per-dimension default
  QuadratureConfig quadrature;
  KernelCheckOptions checks;
  ApplyOptions apply;
  ProfileOptions profile;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

DensitySpec density_from_json(const nlohmann::json& j);
Domain domain_from_json(const nlohmann::json& j, int default_dim);
QuadratureConfig quadrature_from_json(const nlohmann::json& j);

// Compatible recipe (default) or, with "compatible": false, a plain recipe
// without a boundary claim.
TestFunction test_function_from_json(const nlohmann::json& j, const Domain& domain, const Mat& m);

}  // namespace nonloc
