#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tcdp/dp.hpp"
#include "tcdp/market.hpp"
#include "tcdp/options.hpp"

namespace tcdp {

enum class ModelKind { NoConsumption, Consumption, Option, OptionEZ };

std::string to_string(ModelKind k);

/// Bad or inconsistent configuration (exit status 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Diagnostics {
  bool ntr = true;
  int ntr_resolution = 101;
  bool ntr_zoom = true;
  double ntr_tol = 1e-6;
  bool policy_error = false;
  int policy_probes = 1000;
  std::vector<double> ce_points;  // initial risky fractions (y = 0) for certainty equivalents
  bool all_policies = true;       // false: t = 0 only
  bool all_surfaces = true;       // false: t = 0 only
};

struct RunConfig {
  std::string run_id = "run";
  ModelKind kind = ModelKind::NoConsumption;
  PortfolioModel portfolio;       // no_consumption / consumption
  OptionPortfolioModel option;    // option / option_ez
  std::string output_dir = "out";
  int workers = 0;
  std::uint64_t seed = 1;
  Diagnostics diagnostics;

  bool is_option() const { return kind == ModelKind::Option || kind == ModelKind::OptionEZ; }
  /// Effective configuration with every default resolved; loading it back
  /// reproduces this object.
  nlohmann::json to_json() const;
};

/// Throws ConfigError on unknown keys, missing fields or violated model rules.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

struct RunOverrides {
  std::optional<std::string> output_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

/// Solves and writes every artifact into cfg.output_dir. Returns the
/// diagnostics document (also written to diagnostics.json).
nlohmann::json run(const RunConfig& cfg);

/// CLI entry: load, apply overrides, run; writes error.json on failure.
/// Returns 0 on success, 2 on configuration errors, 3 on numerical failure.
int run_main(const std::filesystem::path& config_path, const RunOverrides& ov);

/// Distances between two run directories (matched periods, NTR nesting).
/// Throws ConfigError when the runs are incompatible.
nlohmann::json compare_runs(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace tcdp
