// hyperlqr: run boundary-control scenarios from JSON configs.
//
//   hyperlqr simulate --config configs/case1.json
//   hyperlqr compare  --config configs/case2.json
//   hyperlqr goursat  --config configs/case2.json --n-cells 200
//
// Exit status: 0 ok, 2 configuration or CFL error, 3 solver non-convergence,
// 4 numerical blow-up, 1 anything else.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "hyperlqr/errors.hpp"
#include "hyperlqr/scenario.hpp"

namespace fs = std::filesystem;
using namespace hyperlqr;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kNonConvergence = 3, kBlowUp = 4 };

struct Overrides {
  std::vector<std::string> configs;
  std::string out;
  std::optional<int> n_cells;
  std::optional<double> cfl;
  std::optional<double> t_final;
  std::string controller;
  std::optional<int> snapshot_stride;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Overrides& o, bool many_configs) {
  if (many_configs) {
    cmd->add_option("--config", o.configs, "Scenario config (JSON); repeat to compare several")->required();
  } else {
    cmd->add_option("--config", o.configs, "Scenario config (JSON)")->required()->expected(1);
  }
  cmd->add_option("--out", o.out, "Output directory (default $HYPERLQR_OUT/<name> or out/<name>)");
  cmd->add_option("--n-cells", o.n_cells, "Override grid.n_cells");
  cmd->add_option("--cfl", o.cfl, "Override time.cfl");
  cmd->add_option("--t-final", o.t_final, "Override time.t_final");
  cmd->add_option("--controller", o.controller, "Override the controller");
  cmd->add_option("--snapshot-stride", o.snapshot_stride, "Override output.snapshot_stride");
  cmd->add_flag("--quiet", o.quiet, "Print nothing on success");
}

ScenarioConfig load(const std::string& path, const Overrides& o) {
  ScenarioConfig c = load_config(path);
  if (o.n_cells) c.n_cells = *o.n_cells;
  if (o.cfl) c.cfl = *o.cfl;
  if (o.t_final) c.t_final = *o.t_final;
  if (!o.controller.empty()) c.controller = controller_from_string(o.controller);
  if (o.snapshot_stride) c.snapshot_stride = *o.snapshot_stride;
  c.validate();
  return c;
}

RunOptions run_options(const Overrides& o) {
  RunOptions r;
  if (!o.out.empty()) r.output_dir = fs::path(o.out);
  return r;
}

void print_run(const ScenarioConfig& c, const RunArtifacts& a) {
  std::printf("%s [%s]  n_cells=%d  n_steps=%d\n", c.name.c_str(), to_string(c.controller), c.n_cells,
              a.trajectory.time_grid.n_steps());
  std::printf("  total cost      %s\n", format_number(a.cost.total()).c_str());
  std::printf("  running/terminal %s / %s\n", format_number(a.cost.running()).c_str(),
              format_number(a.cost.terminal()).c_str());
  std::printf("  ||u||  t=0: %s  t=T: %s\n", format_number(a.norm_u.front()).c_str(),
              format_number(a.norm_u.back()).c_str());
  std::printf("  ||v||  t=0: %s  t=T: %s\n", format_number(a.norm_v.front()).c_str(),
              format_number(a.norm_v.back()).c_str());
  if (!a.solver_report.empty()) std::printf("  solver %s\n", a.solver_report.dump().c_str());
  std::printf("  written to %s\n", a.directory.string().c_str());
}

int cmd_run(const Overrides& o, std::optional<Controller> forced) {
  ScenarioConfig c = load(o.configs.front(), o);
  if (forced) c.controller = *forced;
  const RunArtifacts a = run_scenario(c, run_options(o));
  if (!o.quiet) print_run(c, a);
  return kOk;
}

int cmd_riccati(const Overrides& o) {
  ScenarioConfig c = load(o.configs.front(), o);
  if (c.controller != Controller::lqr_steady) c.controller = Controller::lqr;
  const RunArtifacts a = run_scenario(c, run_options(o));
  if (!o.quiet) print_run(c, a);
  return kOk;
}

int cmd_goursat(const Overrides& o) {
  const ScenarioConfig c = load(o.configs.front(), o);
  const GoursatArtifacts g = run_goursat(c, run_options(o));
  if (!o.quiet) {
    std::printf("%s: Goursat kernels, n_cells=%d, %d iterations\n", c.name.c_str(), c.n_cells, g.iterations);
    std::printf("  K^vu(1,1) numeric %s  printed %s\n", format_number(g.kvu_at_1_1).c_str(),
                format_number(g.printed_kvu_at_1_1).c_str());
    std::printf("  diagonal condition max error %s\n", format_number(g.diagonal_error).c_str());
    std::printf("  written to %s\n", g.directory.string().c_str());
  }
  return kOk;
}

int cmd_compare(const Overrides& o) {
  std::vector<ScenarioConfig> configs;
  for (const auto& path : o.configs) configs.push_back(load(path, o));
  if (configs.size() == 1) {
    const ScenarioConfig base = configs.front();
    if (base.compare_with.empty()) {
      throw ConfigError("compare: give two --config files or list controllers in compare_with");
    }
    for (Controller k : base.compare_with) {
      ScenarioConfig other = base;
      other.controller = k;
      configs.push_back(other);
    }
  }
  const fs::path out = o.out.empty() ? default_output_dir(configs.front()) / "compare" : fs::path(o.out);
  const ComparisonTable t = compare_controllers(configs, out);
  if (!o.quiet) {
    std::printf("%-24s %16s %16s\n", "controller", "||u||(T)", "total cost");
    for (const auto& e : t.entries) {
      std::printf("%-24s %16s %16s\n", e.label.c_str(), format_number(e.final_tracking_error).c_str(),
                  format_number(e.total_cost).c_str());
    }
    std::printf("rank by final tracking error:");
    for (const auto& l : t.rank_by_tracking_error) std::printf(" %s", l.c_str());
    std::printf("\nrank by total cost:");
    for (const auto& l : t.rank_by_cost) std::printf(" %s", l.c_str());
    std::printf("\nwritten to %s\n", t.comparison_csv.string().c_str());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary control of 2x2 linear hyperbolic systems"};
  app.require_subcommand(1);

  Overrides o;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run the configured controller");
  auto* riccati_cmd = app.add_subcommand("riccati", "Solve the Riccati kernels and run the LQR loop");
  auto* goursat_cmd = app.add_subcommand("goursat", "Solve the backstepping kernel equations");
  auto* sweep_cmd = app.add_subcommand("sweep", "Open-loop optimal control by forward-backward sweeps");
  auto* compare_cmd = app.add_subcommand("compare", "Run several controllers on the same problem");
  for (auto* cmd : {simulate_cmd, riccati_cmd, goursat_cmd, sweep_cmd}) add_common(cmd, o, false);
  add_common(compare_cmd, o, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate_cmd) return cmd_run(o, std::nullopt);
    if (*riccati_cmd) return cmd_riccati(o);
    if (*goursat_cmd) return cmd_goursat(o);
    if (*sweep_cmd) return cmd_run(o, Controller::open_loop_sweep);
    if (*compare_cmd) return cmd_compare(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const CflViolation& e) {
    std::cerr << e.what() << '\n';
    return kConfig;
  } catch (const ContractViolation& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kConfig;
  } catch (const NonConvergence& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    return kNonConvergence;
  } catch (const NumericalBlowUp& e) {
    std::cerr << "blow-up: " << e.what() << '\n';
    return kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
