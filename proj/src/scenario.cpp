#include "hyperlqr/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include "hyperlqr/adjoint.hpp"
#include "hyperlqr/backstepping.hpp"
#include "hyperlqr/errors.hpp"
#include "hyperlqr/riccati.hpp"

namespace hyperlqr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kProfileKinds = {"zero", "constant", "sine", "bump"};
const std::set<std::string> kKernelKinds = {"zero", "constant", "sine_product"};

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : j.items()) {
    if (allowed.count(item.key()) == 0) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

json profile_to_json(const ProfileSpec& p) {
  return {{"kind", p.kind},     {"amplitude", p.amplitude}, {"mode", p.mode},
          {"offset", p.offset}, {"center", p.center},       {"width", p.width}};
}

ProfileSpec profile_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"kind", "amplitude", "mode", "offset", "center", "width"}, where);
  ProfileSpec p;
  read(j, "kind", p.kind, where);
  read(j, "amplitude", p.amplitude, where);
  read(j, "mode", p.mode, where);
  read(j, "offset", p.offset, where);
  read(j, "center", p.center, where);
  read(j, "width", p.width, where);
  return p;
}

json kernel_to_json(const KernelSpec& k) { return {{"kind", k.kind}, {"amplitude", k.amplitude}, {"mode", k.mode}}; }

KernelSpec kernel_from_json(const json& j, const std::string& where) {
  reject_unknown_keys(j, {"kind", "amplitude", "mode"}, where);
  KernelSpec k;
  read(j, "kind", k.kind, where);
  read(j, "amplitude", k.amplitude, where);
  read(j, "mode", k.mode, where);
  return k;
}

void check_profile(const ProfileSpec& p, const std::string& where) {
  if (kProfileKinds.count(p.kind) == 0) throw ConfigError(where + ": unknown profile kind '" + p.kind + "'");
  for (double v : {p.amplitude, p.mode, p.offset, p.center, p.width}) {
    if (!std::isfinite(v)) throw ConfigError(where + ": non-finite parameter");
  }
  if (p.kind == "bump" && !(p.width > 0.0)) throw ConfigError(where + ": bump width must be positive");
}

void check_kernel(const KernelSpec& k, const std::string& where) {
  if (kKernelKinds.count(k.kind) == 0) throw ConfigError(where + ": unknown kernel kind '" + k.kind + "'");
  if (!std::isfinite(k.amplitude) || !std::isfinite(k.mode)) throw ConfigError(where + ": non-finite parameter");
}

// CSV output

void write_number(std::string& line, double x) {
  line += format_number(x);
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write " + path.string());
  }

  void header(const std::string& first, const std::string& prefix, Eigen::Index count) {
    std::string line = first;
    for (Eigen::Index k = 0; k < count; ++k) line += "," + prefix + std::to_string(k);
    row(line);
  }

  void header(const std::vector<std::string>& names) {
    std::string line;
    for (std::size_t k = 0; k < names.size(); ++k) line += (k ? "," : "") + names[k];
    row(line);
  }

  void values(double t, const Eigen::VectorXd& v) {
    std::string line;
    write_number(line, t);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      line += ',';
      write_number(line, v[k]);
    }
    row(line);
  }

  void values(const std::vector<double>& v) {
    std::string line;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (k) line += ',';
      write_number(line, v[k]);
    }
    row(line);
  }

 private:
  void row(const std::string& line) {
    out_ << line << '\n';
    if (!out_) throw ConfigError("write failed: " + path_.string());
  }

  fs::path path_;
  std::ofstream out_;
};

void write_field_csv(const fs::path& path, const Trajectory& traj, const std::vector<Eigen::VectorXd>& data,
                     int stride) {
  CsvWriter csv(path);
  csv.header("t", "x", traj.grid.n_nodes());
  const int steps = traj.time_grid.n_steps();
  for (int n = 0; n <= steps; ++n) {
    if (n % stride == 0 || n == steps) csv.values(traj.time_grid.time(n), data[static_cast<std::size_t>(n)]);
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  out << j.dump(2) << '\n';
  if (!out) throw ConfigError("cannot write " + path.string());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double max_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

// Controller synthesis

struct Synthesis {
  FeedbackLaw law = FeedbackLaw::zero();
  json report = json::object();
  std::optional<std::vector<Eigen::VectorXd>> gain_rows;
  std::optional<RiccatiKernelSolution> riccati;
};

Synthesis synthesize(const ScenarioConfig& cfg, const SystemParams& params, const CostWeights& w,
                     const Field& u0, const Field& v0, const TimeGrid& tg) {
  Synthesis s;
  const Grid1D grid = params.grid();
  switch (cfg.controller) {
    case Controller::none:
      break;
    case Controller::lqr: {
      const TimeGrid fine = riccati_time_grid(tg, params, cfg.cfl);
      RiccatiOptions ro;
      ro.slice_stride = fine.n_steps();
      RiccatiKernelSolution sol = solve_riccati(params, w, fine, ro);
      s.law = lqr_feedback(sol, grid, tg);
      const auto& lg = std::get<law::LqrGain>(s.law.variant());
      s.gain_rows = lg.rows;
      s.report["riccati"] = {
          {"n_steps", fine.n_steps()},
          {"refinement", fine.n_steps() / tg.n_steps()},
          {"constraint_residual_t0", sol.constraint_residual.front()},
          {"constraint_residual_T", sol.constraint_residual.back()},
          {"max_constraint_residual", max_of(sol.constraint_residual)},
          {"max_outflow_bc_residual", max_of(sol.outflow_bc_residual)},
          {"max_abs_P2_t0", sol.P2.front().values.cwiseAbs().maxCoeff()},
      };
      s.riccati = std::move(sol);
      break;
    }
    case Controller::lqr_steady: {
      const SteadyStateSolution ss = solve_steady_state(params, w);
      s.report["steady_state"] = {{"converged", ss.converged},
                                  {"pseudo_time_iterations", ss.pseudo_time_iterations},
                                  {"residual_norm", ss.residual_norm},
                                  {"constraint_residual", ss.constraint_residual}};
      if (!ss.converged) {
        throw NonConvergence("steady-state Riccati: residual " + format_number(ss.residual_norm) + " after " +
                             std::to_string(ss.pseudo_time_iterations) + " pseudo-time steps");
      }
      const Field g = ss.gain(params.eps2, w.R);
      s.law = FeedbackLaw::lqr_gain(g, tg.n_steps());
      s.gain_rows = std::vector<Eigen::VectorXd>(static_cast<std::size_t>(tg.n_steps()) + 1, g.values);
      break;
    }
    case Controller::backstepping_explicit: {
      BacksteppingGains gains = explicit_gain_traces(grid);
      s.report["backstepping"] = {{"source", to_string(gains.source)},
                                  {"kvu_1_1", gains.kvu_trace[grid.n_cells()]},
                                  {"kvu_1_0", gains.kvu_trace[0]}};
      s.law = FeedbackLaw::backstepping(std::move(gains));
      break;
    }
    case Controller::backstepping_goursat: {
      const GoursatKernels k = solve_goursat(params, grid);
      BacksteppingGains gains = k.traces();
      const BacksteppingGains printed = explicit_gain_traces(grid);
      double diag_error = 0.0;
      for (int i = 0; i < grid.n_nodes(); ++i) {
        diag_error = std::max(diag_error, std::abs(k.kvu(i, i) + params.c2.values[i] / (params.eps1 + params.eps2)));
      }
      s.report["goursat"] = {
          {"iterations", k.iterations},
          {"converged", k.converged},
          {"kvu_diagonal_max_error", diag_error},
          {"kvu_1_1", gains.kvu_trace[grid.n_cells()]},
          {"kvu_1_0", gains.kvu_trace[0]},
          {"kvv_1_0", gains.kvv_trace[0]},
          {"printed_kvu_1_1", printed.kvu_trace[grid.n_cells()]},
          {"printed_kvu_1_0", printed.kvu_trace[0]},
      };
      s.law = FeedbackLaw::backstepping(std::move(gains));
      break;
    }
    case Controller::open_loop_sweep: {
      SweepResult r = forward_backward_sweep(params, u0, v0, w, tg);
      s.report["sweep"] = {{"iterations", r.report.iterations},
                           {"converged", r.report.converged},
                           {"final_gradient_norm", r.report.final_gradient_norm},
                           {"final_stationarity", r.report.final_stationarity},
                           {"cost_drift", r.report.cost_drift},
                           {"initial_cost", r.report.cost_history.front()},
                           {"final_cost", r.report.cost_history.back()},
                           {"message", r.report.message}};
      if (!r.report.converged) throw NonConvergence("forward_backward_sweep: " + r.report.message);
      s.law = FeedbackLaw::open_loop(std::move(r.control));
      break;
    }
  }
  return s;
}

std::string unique_label(const std::string& base, std::set<std::string>& used) {
  std::string label = base;
  for (int k = 2; used.count(label) != 0; ++k) label = base + "_" + std::to_string(k);
  used.insert(label);
  return label;
}

}  // namespace

ProfileSpec ProfileSpec::constant(double value) {
  ProfileSpec p;
  p.kind = "constant";
  p.amplitude = value;
  return p;
}

ProfileSpec ProfileSpec::sine(double amplitude, double mode) {
  ProfileSpec p;
  p.kind = "sine";
  p.amplitude = amplitude;
  p.mode = mode;
  return p;
}

Field ProfileSpec::sample(const Grid1D& grid) const {
  check_profile(*this, "profile");
  if (kind == "zero") return Field::zeros(grid);
  if (kind == "constant") return Field::constant(grid, amplitude);
  if (kind == "sine") {
    return Field::sample(grid, [&](double x) { return amplitude * sin_pi(mode * x) + offset; });
  }
  return Field::sample(grid, [&](double x) {
    const double z = (x - center) / width;
    return amplitude * std::exp(-z * z);
  });
}

KernelSpec KernelSpec::sine_product(double amplitude, double mode) {
  KernelSpec k;
  k.kind = "sine_product";
  k.amplitude = amplitude;
  k.mode = mode;
  return k;
}

Kernel2D KernelSpec::sample(const Grid1D& grid) const {
  check_kernel(*this, "kernel");
  if (kind == "zero") return Kernel2D::zeros(grid);
  if (kind == "constant") {
    return {grid, Eigen::MatrixXd::Constant(grid.n_nodes(), grid.n_nodes(), amplitude)};
  }
  // Sampled as an outer product so that the matrix is exactly symmetric.
  const Eigen::VectorXd s = Field::sample(grid, [&](double x) { return sin_pi(mode * x); }).values;
  return {grid, amplitude * s * s.transpose()};
}

const char* to_string(Controller c) {
  switch (c) {
    case Controller::none: return "none";
    case Controller::lqr: return "lqr";
    case Controller::lqr_steady: return "lqr_steady";
    case Controller::backstepping_explicit: return "backstepping_explicit";
    case Controller::backstepping_goursat: return "backstepping_goursat";
    case Controller::open_loop_sweep: return "open_loop_sweep";
  }
  return "?";
}

Controller controller_from_string(const std::string& name) {
  for (Controller c : {Controller::none, Controller::lqr, Controller::lqr_steady, Controller::backstepping_explicit,
                       Controller::backstepping_goursat, Controller::open_loop_sweep}) {
    if (name == to_string(c)) return c;
  }
  throw ConfigError("unknown controller '" + name + "'");
}

void ScenarioConfig::validate() const {
  if (schema_version != kSchemaVersion) {
    throw ConfigError("schema_version " + std::to_string(schema_version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  }
  if (name.empty() || name.find_first_of("/\\") != std::string::npos) {
    throw ConfigError("name must be non-empty and contain no path separators");
  }
  if (!(eps1 > 0.0) || !(eps2 > 0.0) || !std::isfinite(eps1) || !std::isfinite(eps2)) {
    throw ConfigError("params: eps1 and eps2 must be positive");
  }
  if (!(q != 0.0) || !std::isfinite(q)) throw ConfigError("params: q must be finite and non-zero");
  check_profile(c1, "params.c1");
  check_profile(c2, "params.c2");
  if (!(R > 0.0)) throw ConfigError("weights: R must be positive");
  check_kernel(Q1, "weights.Q1");
  check_kernel(Q2, "weights.Q2");
  check_kernel(Pf1, "weights.Pf1");
  check_kernel(Pf2, "weights.Pf2");
  if (n_cells < 2) throw ConfigError("grid: n_cells must be at least 2");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) throw ConfigError("time: t_final must be positive");
  if (!(cfl > 0.0) || cfl > 1.0) throw ConfigError("time: cfl must lie in (0, 1]");
  if (n_steps && *n_steps < 1) throw ConfigError("time: n_steps must be positive");
  check_profile(u0, "initial.u0");
  check_profile(v0, "initial.v0");
  if (snapshot_stride < 1) throw ConfigError("output: snapshot_stride must be positive");
  if (controller == Controller::open_loop_sweep && std::isinf(R)) {
    throw ConfigError("open_loop_sweep needs a finite R");
  }
}

SystemParams ScenarioConfig::params() const {
  const Grid1D g = grid();
  return {eps1, eps2, c1.sample(g), c2.sample(g), q};
}

CostWeights ScenarioConfig::weights() const {
  const Grid1D g = grid();
  return {Q1.sample(g), Q2.sample(g), Pf1.sample(g), Pf2.sample(g), R};
}

TimeGrid ScenarioConfig::time_grid() const {
  if (n_steps) return {t_final, *n_steps};
  return TimeGrid::from_cfl(t_final, grid().dx(), std::max(eps1, eps2), cfl);
}

bool ScenarioConfig::same_problem(const ScenarioConfig& o) const {
  return eps1 == o.eps1 && eps2 == o.eps2 && q == o.q && c1 == o.c1 && c2 == o.c2 && R == o.R && Q1 == o.Q1 &&
         Q2 == o.Q2 && Pf1 == o.Pf1 && Pf2 == o.Pf2 && n_cells == o.n_cells && t_final == o.t_final &&
         time_grid() == o.time_grid() && u0 == o.u0 && v0 == o.v0;
}

void to_json(json& j, const ScenarioConfig& c) {
  json R = std::isinf(c.R) ? json("inf") : json(c.R);
  json time = {{"t_final", c.t_final}, {"cfl", c.cfl}};
  if (c.n_steps) time["n_steps"] = *c.n_steps;
  json compare = json::array();
  for (Controller k : c.compare_with) compare.push_back(to_string(k));
  j = {
      {"schema_version", c.schema_version},
      {"name", c.name},
      {"params",
       {{"eps1", c.eps1}, {"eps2", c.eps2}, {"q", c.q}, {"c1", profile_to_json(c.c1)}, {"c2", profile_to_json(c.c2)}}},
      {"weights",
       {{"R", R},
        {"Q1", kernel_to_json(c.Q1)},
        {"Q2", kernel_to_json(c.Q2)},
        {"Pf1", kernel_to_json(c.Pf1)},
        {"Pf2", kernel_to_json(c.Pf2)}}},
      {"grid", {{"n_cells", c.n_cells}}},
      {"time", time},
      {"initial", {{"u0", profile_to_json(c.u0)}, {"v0", profile_to_json(c.v0)}}},
      {"controller", to_string(c.controller)},
      {"compare_with", compare},
      {"output", {{"dir", c.output_dir}, {"snapshot_stride", c.snapshot_stride}}},
  };
}

void from_json(const json& j, ScenarioConfig& c) {
  reject_unknown_keys(j,
                      {"schema_version", "name", "params", "weights", "grid", "time", "initial", "controller",
                       "compare_with", "output"},
                      "config");
  c = ScenarioConfig{};
  read(j, "schema_version", c.schema_version, "config");
  read(j, "name", c.name, "config");

  if (j.contains("params")) {
    const json& p = j["params"];
    reject_unknown_keys(p, {"eps1", "eps2", "q", "c1", "c2"}, "params");
    read(p, "eps1", c.eps1, "params");
    read(p, "eps2", c.eps2, "params");
    read(p, "q", c.q, "params");
    if (p.contains("c1")) c.c1 = profile_from_json(p["c1"], "params.c1");
    if (p.contains("c2")) c.c2 = profile_from_json(p["c2"], "params.c2");
  }
  if (j.contains("weights")) {
    const json& w = j["weights"];
    reject_unknown_keys(w, {"R", "Q1", "Q2", "Pf1", "Pf2"}, "weights");
    if (w.contains("R")) {
      const json& r = w["R"];
      if (r.is_string() && (r == "inf" || r == "infinity")) {
        c.R = std::numeric_limits<double>::infinity();
      } else if (r.is_number()) {
        c.R = r.get<double>();
      } else {
        throw ConfigError("weights.R: expected a number or \"inf\"");
      }
    }
    if (w.contains("Q1")) c.Q1 = kernel_from_json(w["Q1"], "weights.Q1");
    if (w.contains("Q2")) c.Q2 = kernel_from_json(w["Q2"], "weights.Q2");
    if (w.contains("Pf1")) c.Pf1 = kernel_from_json(w["Pf1"], "weights.Pf1");
    if (w.contains("Pf2")) c.Pf2 = kernel_from_json(w["Pf2"], "weights.Pf2");
  }
  if (j.contains("grid")) {
    reject_unknown_keys(j["grid"], {"n_cells"}, "grid");
    read(j["grid"], "n_cells", c.n_cells, "grid");
  }
  if (j.contains("time")) {
    const json& t = j["time"];
    reject_unknown_keys(t, {"t_final", "cfl", "n_steps"}, "time");
    read(t, "t_final", c.t_final, "time");
    read(t, "cfl", c.cfl, "time");
    if (t.contains("n_steps") && !t["n_steps"].is_null()) {
      int n = 0;
      read(t, "n_steps", n, "time");
      c.n_steps = n;
    }
  }
  if (j.contains("initial")) {
    const json& i = j["initial"];
    reject_unknown_keys(i, {"u0", "v0"}, "initial");
    if (i.contains("u0")) c.u0 = profile_from_json(i["u0"], "initial.u0");
    if (i.contains("v0")) c.v0 = profile_from_json(i["v0"], "initial.v0");
  }
  if (j.contains("controller")) {
    std::string name;
    read(j, "controller", name, "config");
    c.controller = controller_from_string(name);
  }
  if (j.contains("compare_with")) {
    std::vector<std::string> names;
    read(j, "compare_with", names, "config");
    for (const auto& n : names) c.compare_with.push_back(controller_from_string(n));
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    reject_unknown_keys(o, {"dir", "snapshot_stride"}, "output");
    read(o, "dir", c.output_dir, "output");
    read(o, "snapshot_stride", c.snapshot_stride, "output");
  }
}

ScenarioConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  ScenarioConfig c = j.get<ScenarioConfig>();
  c.validate();
  return c;
}

void save_config(const ScenarioConfig& c, const fs::path& path) { write_json(path, json(c)); }

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

fs::path default_output_dir(const ScenarioConfig& config) {
  if (!config.output_dir.empty()) return config.output_dir;
  const char* root = std::getenv("HYPERLQR_OUT");
  return fs::path(root != nullptr && *root != '\0' ? root : "out") / config.name;
}

std::vector<fs::path> RunArtifacts::files() const {
  std::vector<fs::path> out = {u_csv, v_csv, signals_csv, summary_json, config_json};
  if (gain_rows_csv) out.push_back(*gain_rows_csv);
  if (riccati_diag_csv) out.push_back(*riccati_diag_csv);
  return out;
}

RunArtifacts run_scenario(const ScenarioConfig& config, const RunOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  const SystemParams params = config.params();
  const CostWeights w = config.weights();
  const TimeGrid tg = config.time_grid();
  const Field u0 = config.u0.sample(params.grid());
  const Field v0 = config.v0.sample(params.grid());

  const Synthesis syn = synthesize(config, params, w, u0, v0, tg);
  const double t_synthesis = seconds_since(t_start);

  const auto t_sim = std::chrono::steady_clock::now();
  Trajectory traj = simulate(params, u0, v0, syn.law, tg);
  const double t_simulate = seconds_since(t_sim);

  const fs::path dir = opts.output_dir ? *opts.output_dir : default_output_dir(config);
  fs::create_directories(dir);

  RunArtifacts art{dir,
                   dir / "u.csv",
                   dir / "v.csv",
                   dir / "signals.csv",
                   dir / "summary.json",
                   dir / "config.json",
                   std::nullopt,
                   std::nullopt,
                   traj,
                   cost_breakdown(traj, w),
                   {},
                   {},
                   running_cost_series(traj, w),
                   syn.report};
  for (int n = 0; n <= tg.n_steps(); ++n) {
    art.norm_u.push_back(l2_norm(traj.u_at(n)));
    art.norm_v.push_back(l2_norm(traj.v_at(n)));
  }

  write_field_csv(art.u_csv, traj, traj.u, config.snapshot_stride);
  write_field_csv(art.v_csv, traj, traj.v, config.snapshot_stride);
  {
    CsvWriter csv(art.signals_csv);
    csv.header({"t", "U", "norm_u", "norm_v", "running_cost"});
    for (int n = 0; n <= tg.n_steps(); ++n) {
      const auto k = static_cast<std::size_t>(n);
      csv.values({tg.time(n), traj.control.values[n], art.norm_u[k], art.norm_v[k], art.running_cost[k]});
    }
  }
  if (syn.gain_rows) {
    art.gain_rows_csv = dir / "gain_rows.csv";
    CsvWriter csv(*art.gain_rows_csv);
    csv.header("t", "y", params.grid().n_nodes());
    for (int n = 0; n <= tg.n_steps(); ++n) csv.values(tg.time(n), (*syn.gain_rows)[static_cast<std::size_t>(n)]);
  }
  if (syn.riccati) {
    art.riccati_diag_csv = dir / "riccati_diag.csv";
    CsvWriter csv(*art.riccati_diag_csv);
    csv.header({"t", "constraint_residual", "outflow_bc_residual"});
    const RiccatiKernelSolution& sol = *syn.riccati;
    for (int n = 0; n <= sol.time_grid.n_steps(); ++n) {
      const auto k = static_cast<std::size_t>(n);
      csv.values({sol.time_grid.time(n), sol.constraint_residual[k], sol.outflow_bc_residual[k]});
    }
  }
  save_config(config, art.config_json);

  const CostBreakdown& c = art.cost;
  json files = json::object();
  for (const fs::path& p : art.files()) files[p.stem().string()] = p.filename().string();
  json summary = {
      {"schema_version", ScenarioConfig::kSchemaVersion},
      {"name", config.name},
      {"controller", to_string(config.controller)},
      {"grid", {{"n_cells", params.grid().n_cells()}, {"dx", params.grid().dx()}}},
      {"time", {{"t_final", tg.t_final()}, {"n_steps", tg.n_steps()}, {"dt", tg.dt()}}},
      {"cost",
       {{"total", c.total()},
        {"running", {{"u", c.running_u}, {"v", c.running_v}, {"control", c.running_control}, {"total", c.running()}}},
        {"terminal", {{"u", c.terminal_u}, {"v", c.terminal_v}, {"total", c.terminal()}}}}},
      {"norms",
       {{"initial_u", art.norm_u.front()},
        {"initial_v", art.norm_v.front()},
        {"final_u", art.norm_u.back()},
        {"final_v", art.norm_v.back()}}},
      {"solver", syn.report},
      {"files", files},
  };
  summary["runtime_s"] = {{"synthesis", t_synthesis}, {"simulate", t_simulate}, {"total", seconds_since(t_start)}};
  write_json(art.summary_json, summary);
  return art;
}

GoursatArtifacts run_goursat(const ScenarioConfig& config, const RunOptions& opts) {
  const auto t_start = std::chrono::steady_clock::now();
  config.validate();
  const SystemParams params = config.params();
  const Grid1D grid = params.grid();
  const GoursatKernels k = solve_goursat(params, grid);
  const BacksteppingGains numeric = k.traces();
  const BacksteppingGains printed = explicit_gain_traces(grid);

  const fs::path dir = opts.output_dir ? *opts.output_dir : default_output_dir(config);
  fs::create_directories(dir);
  GoursatArtifacts art{dir, dir / "kernel_traces.csv", dir / "summary.json", k.iterations, 0.0,
                       numeric.kvu_trace[grid.n_cells()], printed.kvu_trace[grid.n_cells()]};
  for (int i = 0; i < grid.n_nodes(); ++i) {
    art.diagonal_error =
        std::max(art.diagonal_error, std::abs(k.kvu(i, i) + params.c2.values[i] / (params.eps1 + params.eps2)));
  }
  {
    CsvWriter csv(art.traces_csv);
    csv.header({"y", "kvu_goursat", "kvv_goursat", "kvu_printed", "kvv_printed"});
    for (int j = 0; j < grid.n_nodes(); ++j) {
      csv.values({grid.node(j), numeric.kvu_trace[j], numeric.kvv_trace[j], printed.kvu_trace[j],
                  printed.kvv_trace[j]});
    }
  }
  json summary = {
      {"schema_version", ScenarioConfig::kSchemaVersion},
      {"name", config.name},
      {"goursat",
       {{"iterations", k.iterations},
        {"converged", k.converged},
        {"contraction_history", k.contraction_history},
        {"kvu_diagonal_max_error", art.diagonal_error},
        {"kvu_1_1", art.kvu_at_1_1},
        {"printed_kvu_1_1", art.printed_kvu_at_1_1},
        {"kvu_1_0", numeric.kvu_trace[0]},
        {"kvv_1_0", numeric.kvv_trace[0]},
        {"printed_kvu_1_0", printed.kvu_trace[0]}}},
      {"files", {{"kernel_traces", "kernel_traces.csv"}}},
  };
  summary["runtime_s"] = {{"total", seconds_since(t_start)}};
  write_json(art.summary_json, summary);
  return art;
}

ComparisonTable compare_controllers(const std::vector<ScenarioConfig>& configs, const fs::path& out) {
  if (configs.size() < 2) throw ConfigError("compare: need at least two configurations");
  for (const auto& c : configs) c.validate();
  for (std::size_t k = 1; k < configs.size(); ++k) {
    if (!configs[0].same_problem(configs[k])) {
      throw ConfigError("compare: '" + configs[0].name + "' and '" + configs[k].name +
                        "' differ in plant, weights, discretization or initial data");
    }
  }

  ComparisonTable table;
  std::set<std::string> used;
  for (const auto& c : configs) {
    const std::string label = unique_label(to_string(c.controller), used);
    RunOptions ro;
    ro.output_dir = out / label;
    table.runs.push_back(run_scenario(c, ro));
    const RunArtifacts& r = table.runs.back();
    table.entries.push_back({label, c.controller, r.norm_u.back(), r.cost.total()});
  }
  const TimeGrid& tg = table.runs.front().trajectory.time_grid;
  for (int n = 0; n <= tg.n_steps(); ++n) table.time.push_back(tg.time(n));

  std::vector<std::size_t> order(table.entries.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.entries[a].final_tracking_error < table.entries[b].final_tracking_error;
  });
  for (std::size_t k : order) table.rank_by_tracking_error.push_back(table.entries[k].label);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return table.entries[a].total_cost < table.entries[b].total_cost;
  });
  for (std::size_t k : order) table.rank_by_cost.push_back(table.entries[k].label);

  // Cumulative running cost by the trapezoid rule in time.
  std::vector<std::vector<double>> cumulative;
  for (const RunArtifacts& r : table.runs) {
    std::vector<double> acc(r.running_cost.size(), 0.0);
    for (std::size_t n = 1; n < acc.size(); ++n) {
      acc[n] = acc[n - 1] + 0.5 * tg.dt() * (r.running_cost[n - 1] + r.running_cost[n]);
    }
    cumulative.push_back(std::move(acc));
  }

  fs::create_directories(out);
  table.comparison_csv = out / "comparison.csv";
  CsvWriter csv(table.comparison_csv);
  std::vector<std::string> names = {"t"};
  for (const auto& e : table.entries) {
    for (const char* col : {"U_", "norm_u_", "norm_v_", "cumulative_cost_"}) names.push_back(col + e.label);
  }
  csv.header(names);
  for (std::size_t n = 0; n < table.time.size(); ++n) {
    std::vector<double> row = {table.time[n]};
    for (std::size_t k = 0; k < table.runs.size(); ++k) {
      const RunArtifacts& r = table.runs[k];
      row.insert(row.end(), {r.trajectory.control.values[static_cast<Eigen::Index>(n)], r.norm_u[n], r.norm_v[n],
                             cumulative[k][n]});
    }
    csv.values(row);
  }
  return table;
}

}  // namespace hyperlqr
