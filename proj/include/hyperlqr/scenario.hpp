#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperlqr/cost.hpp"
#include "hyperlqr/grid.hpp"
#include "hyperlqr/simulate.hpp"
#include "hyperlqr/system.hpp"

namespace hyperlqr {

/// Named scalar profile on [0, 1].
///   zero:     0
///   constant: amplitude
///   sine:     amplitude sin(mode pi x) + offset
///   bump:     amplitude exp(-((x - center) / width)^2)
struct ProfileSpec {
  std::string kind = "zero";
  double amplitude = 1.0;
  double mode = 1.0;
  double offset = 0.0;
  double center = 0.5;
  double width = 0.1;

  static ProfileSpec constant(double value);
  static ProfileSpec sine(double amplitude, double mode = 1.0);

  Field sample(const Grid1D& grid) const;
  bool operator==(const ProfileSpec&) const = default;
};

/// Named kernel on [0, 1]^2.
///   zero:         0
///   constant:     amplitude
///   sine_product: amplitude sin(mode pi x) sin(mode pi y)
struct KernelSpec {
  std::string kind = "zero";
  double amplitude = 1.0;
  double mode = 1.0;

  static KernelSpec sine_product(double amplitude, double mode = 1.0);

  Kernel2D sample(const Grid1D& grid) const;
  bool operator==(const KernelSpec&) const = default;
};

enum class Controller { none, lqr, lqr_steady, backstepping_explicit, backstepping_goursat, open_loop_sweep };

const char* to_string(Controller c);
/// Throws ConfigError on an unknown name.
Controller controller_from_string(const std::string& name);

struct ScenarioConfig {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  std::string name = "scenario";

  double eps1 = 1.0;
  double eps2 = 1.0;
  double q = 1.0;
  ProfileSpec c1 = ProfileSpec::constant(10.0);
  ProfileSpec c2 = ProfileSpec::constant(20.0);

  /// R = +inf is written as the string "inf".
  double R = 1.0;
  KernelSpec Q1 = KernelSpec::sine_product(10.0);
  KernelSpec Q2 = KernelSpec::sine_product(20.0);
  KernelSpec Pf1 = KernelSpec::sine_product(1.0);
  KernelSpec Pf2 = KernelSpec::sine_product(5.0);

  int n_cells = 100;
  double t_final = 1.0;
  double cfl = 0.9;
  /// Overrides the CFL-derived step count when set.
  std::optional<int> n_steps;

  ProfileSpec u0 = ProfileSpec::sine(1.0);
  ProfileSpec v0 = ProfileSpec::sine(1.0);

  Controller controller = Controller::lqr;
  /// Controllers run against this one by compare when only one config is given.
  std::vector<Controller> compare_with;

  /// Empty: $HYPERLQR_OUT/<name> or ./out/<name>.
  std::string output_dir;
  /// Every k-th time step is written to u.csv / v.csv (the last step always).
  int snapshot_stride = 1;

  /// Throws ConfigError.
  void validate() const;

  SystemParams params() const;
  CostWeights weights() const;
  TimeGrid time_grid() const;
  Grid1D grid() const { return Grid1D(n_cells); }

  /// True when plant, weights, discretization and initial data coincide.
  bool same_problem(const ScenarioConfig& other) const;

  bool operator==(const ScenarioConfig&) const = default;
};

void to_json(nlohmann::json& j, const ScenarioConfig& c);
/// Missing keys take the defaults above; unknown keys are rejected.
void from_json(const nlohmann::json& j, ScenarioConfig& c);

/// Reads and validates a config file. Throws ConfigError.
ScenarioConfig load_config(const std::filesystem::path& path);
void save_config(const ScenarioConfig& c, const std::filesystem::path& path);

struct RunArtifacts {
  std::filesystem::path directory;
  std::filesystem::path u_csv;
  std::filesystem::path v_csv;
  std::filesystem::path signals_csv;
  std::filesystem::path summary_json;
  std::filesystem::path config_json;
  /// gain_rows: lqr and lqr_steady. riccati_diag: lqr.
  std::optional<std::filesystem::path> gain_rows_csv;
  std::optional<std::filesystem::path> riccati_diag_csv;

  Trajectory trajectory;
  CostBreakdown cost;
  std::vector<double> norm_u;
  std::vector<double> norm_v;
  std::vector<double> running_cost;
  /// Controller-specific diagnostics, also stored in summary.json.
  nlohmann::json solver_report;

  std::vector<std::filesystem::path> files() const;
};

struct RunOptions {
  /// Takes precedence over config.output_dir.
  std::optional<std::filesystem::path> output_dir;
};

/// Builds the plant, synthesizes the controller, simulates, evaluates the
/// cost and writes u.csv, v.csv, signals.csv, summary.json and config.json;
/// lqr and lqr_steady add gain_rows.csv, lqr also riccati_diag.csv (one row
/// per Riccati time step).
///
/// Throws ConfigError, CflViolation, NonConvergence (including a sweep that
/// stops unconverged) and NumericalBlowUp.
RunArtifacts run_scenario(const ScenarioConfig& config, const RunOptions& opts = {});

/// Output directory used when neither RunOptions nor the config name one.
std::filesystem::path default_output_dir(const ScenarioConfig& config);

struct ComparisonEntry {
  std::string label;
  Controller controller;
  double final_tracking_error;
  double total_cost;
};

struct ComparisonTable {
  std::vector<double> time;
  std::vector<ComparisonEntry> entries;
  std::vector<RunArtifacts> runs;
  /// Labels ordered by final ||u||, then by total cost (ascending).
  std::vector<std::string> rank_by_tracking_error;
  std::vector<std::string> rank_by_cost;
  std::filesystem::path comparison_csv;
};

/// Runs each config into its own subdirectory of `out` and writes
/// comparison.csv with columns t, then U_<label>, norm_u_<label>,
/// norm_v_<label>, cumulative_cost_<label> for each run. Refuses (ConfigError)
/// configs that do not pose the same problem.
ComparisonTable compare_controllers(const std::vector<ScenarioConfig>& configs, const std::filesystem::path& out);

struct GoursatArtifacts {
  std::filesystem::path directory;
  /// y, kvu_goursat, kvv_goursat, kvu_printed, kvv_printed at x = 1.
  std::filesystem::path traces_csv;
  std::filesystem::path summary_json;
  int iterations;
  /// max_i |K^vu(x_i, x_i) + c2(x_i)/(eps1 + eps2)|
  double diagonal_error;
  double kvu_at_1_1;
  double printed_kvu_at_1_1;
};

/// Solves the kernel equations for the config's plant and writes the gain
/// traces next to the printed closed-form traces.
GoursatArtifacts run_goursat(const ScenarioConfig& config, const RunOptions& opts = {});

/// Shortest round-trip decimal form.
std::string format_number(double x);

}  // namespace hyperlqr
