#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "ddlpv/benchmarks.hpp"
#include "ddlpv/report.hpp"

using namespace ddlpv;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kNotPe = 3, kInfeasible = 4, kSolver = 5 };

struct RunConfig {
  std::string data;
  std::string plant;
  std::string controller;
  std::string mode = "stabilize";
  std::vector<double> q;
  std::vector<double> r;
  std::optional<double> gamma;
  bool minimize_gamma = false;
  bool robust = false;
  double lambda = 0.1;
  std::optional<double> trace_min;
  std::optional<double> trace_max;
  std::string trace_objective = "max";
  std::vector<double> p_lo;
  std::vector<double> p_hi;
  std::optional<double> eps_claim;
  unsigned long long seed = 1;
  std::string out;
  SolverSettings solver;
  bool verify = true;
};

void add_solver_options(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--margin", c.solver.margin, "Strictness margin of the LMIs");
  cmd->add_option("--delta", c.solver.delta, "Multiplier definiteness margin");
  cmd->add_option("--tol-gap", c.solver.tol_gap, "Relative duality gap tolerance");
  cmd->add_option("--tol-feas", c.solver.tol_feas, "Feasibility tolerance");
  cmd->add_option("--max-iter", c.solver.max_iter, "Interior point iteration cap");
  cmd->add_flag("--verbose", c.solver.verbose, "Print solver iterations");
}

void add_synthesis_options(CLI::App* cmd, RunConfig& c) {
  cmd->add_option("--data", c.data, "Data dictionary (.csv or .json)")->required();
  cmd->add_option("--q", c.q, "State weight: n_x diagonal entries or n_x^2 row-major entries");
  cmd->add_option("--r", c.r, "Input weight: n_u diagonal entries or n_u^2 row-major entries");
  cmd->add_option("--gamma", c.gamma, "Fixed performance level");
  cmd->add_flag("--minimize-gamma", c.minimize_gamma, "Minimize the performance level (default)");
  cmd->add_flag("--robust", c.robust, "Parameter-independent controller (K1..Knp = 0)");
  cmd->add_option("--lambda", c.lambda, "Trace regularization weight of the l2 objective");
  cmd->add_option("--trace-min", c.trace_min, "Lower bound on trace(P)");
  cmd->add_option("--trace-max", c.trace_max, "Upper bound on trace(P)");
  cmd->add_option("--trace-objective", c.trace_objective, "Quadratic mode: max or min trace(P)")
      ->check(CLI::IsMember({"max", "min"}));
  cmd->add_option("--p-lo", c.p_lo, "Scheduling box lower corner (default -1)");
  cmd->add_option("--p-hi", c.p_hi, "Scheduling box upper corner (default 1)");
  cmd->add_option("--eps", c.eps_claim, "Noisy mode: claimed noise level eps");
  cmd->add_option("--plant", c.plant, "Plant JSON used for verification instead of the data surrogate");
  cmd->add_option("--controller", c.controller, "Controller JSON (analyze mode)");
  cmd->add_option("--out", c.out, "Report path (a directory receives report.json)");
  cmd->add_flag("!--no-verify", c.verify, "Skip the verification block");
  add_solver_options(cmd, c);
}

Mat weight(const std::vector<double>& v, int n, const char* what) {
  if (v.empty()) return Mat::Identity(n, n);
  if (static_cast<int>(v.size()) == n) return Vec(Eigen::Map<const Vec>(v.data(), n)).asDiagonal();
  if (static_cast<int>(v.size()) == n * n) {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        v.data(), n, n);
  }
  throw DimMismatch(std::string(what) + " needs " + std::to_string(n) + " or " +
                    std::to_string(n * n) + " entries");
}

Box pset_of(const RunConfig& c, int np) {
  Box b = Box::symmetric(np);
  if (!c.p_lo.empty()) {
    if (static_cast<int>(c.p_lo.size()) != np) throw DimMismatch("--p-lo needs n_p entries");
    b.lower = Eigen::Map<const Vec>(c.p_lo.data(), np);
  }
  if (!c.p_hi.empty()) {
    if (static_cast<int>(c.p_hi.size()) != np) throw DimMismatch("--p-hi needs n_p entries");
    b.upper = Eigen::Map<const Vec>(c.p_hi.data(), np);
  }
  return Box(b.lower, b.upper);
}

std::string report_path(const std::string& out) {
  if (out.empty()) return {};
  const std::filesystem::path p(out);
  if (std::filesystem::is_directory(p) || p.extension().empty()) return (p / "report.json").string();
  return out;
}

void emit(const json& j, const std::string& out) {
  const std::string path = report_path(out);
  if (path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text_file(path, j.dump(2) + "\n");
    std::cout << "wrote " << path << "\n";
  }
}

int status_exit(const SynthesisResult& r) {
  switch (r.status) {
    case SolveStatus::Optimal:
    case SolveStatus::Feasible: return kOk;
    case SolveStatus::Infeasible: return kInfeasible;
    case SolveStatus::NumericalFailure: return kSolver;
  }
  return kSolver;
}

int cmd_check_pe(const RunConfig& c) {
  PeReport pe;
  if (file_is_noisy(c.data)) {
    pe = check_pe(build_noisy_matrices(load_noisy_dictionary(c.data)).data);
  } else {
    pe = check_pe(build_matrices(load_dictionary(c.data)));
  }
  emit({{"rank", pe.rank}, {"required", pe.required}, {"is_pe", pe.is_pe}}, c.out);
  return pe.is_pe ? kOk : kNotPe;
}

int cmd_synth(const RunConfig& c) {
  const Mode mode = mode_from_string(c.mode);
  const bool noisy = file_is_noisy(c.data);
  if (noisy && mode != Mode::Noisy) throw Error("noisy dictionaries require --mode noisy");
  DataMatrices dm;
  NoisyMatrices nm;
  if (noisy) {
    nm = build_noisy_matrices(load_noisy_dictionary(c.data));
    dm = nm.data;
  } else {
    dm = build_matrices(load_dictionary(c.data));
    nm.data = dm;
  }
  const PeReport pe = check_pe(dm);
  if (!pe.is_pe) {
    emit({{"rank", pe.rank}, {"required", pe.required}, {"is_pe", false}}, c.out);
    return kNotPe;
  }
  const Box pset = pset_of(c, dm.np());
  SynthesisRequest req;
  req.mode = mode;
  req.robust = c.robust;
  req.reg_lambda = c.lambda;
  req.maximize_trace = c.trace_objective == "max";
  req.eps_claim = c.eps_claim;
  req.solver = c.solver;
  if (!c.minimize_gamma) req.gamma = c.gamma;
  if (c.trace_min || c.trace_max) {
    req.trace_box = Interval{c.trace_min.value_or(0.0),
                             c.trace_max.value_or(std::numeric_limits<double>::infinity())};
  }
  if (mode == Mode::Quadratic || mode == Mode::H2 || mode == Mode::L2) {
    req.weights = PerfWeights{weight(c.q, dm.nx(), "--q"), weight(c.r, dm.nu(), "--r")};
    req.weights->validate();
  }
  SynthesisResult r;
  if (mode == Mode::Analyze) {
    if (c.controller.empty()) throw Error("analyze mode needs --controller");
    const StateFeedbackController k = controller_from_json(read_json_file(c.controller));
    r = noisy ? analyze_noisy(nm, k, pset, c.solver) : analyze_stability(dm, k, pset, c.solver);
    r.ctrl = k;
  } else if (mode == Mode::Noisy) {
    r = synth_noisy_stabilizing(nm, pset, req);
  } else {
    r = run_synthesis(ClosedLoopSource::from_data(dm), pset, req);
  }
  std::optional<VerifyReport> v;
  if (c.verify && r.ok()) {
    LpvSs sys = c.plant.empty() ? lpv_surrogate(dm, pset) : lpv_from_json(read_json_file(c.plant));
    sys.p_set = pset;
    VerifyOptions vo;
    vo.seed = c.seed;
    const std::optional<Mat> p_mat =
        r.cert.p_mat.size() > 0 ? std::optional<Mat>(r.cert.p_mat) : std::nullopt;
    v = verify(sys, r.ctrl, req.weights, p_mat, vo);
  }
  emit(synthesis_report(r, v), c.out);
  return status_exit(r);
}

LpvSs builtin_plant(int study) {
  if (study == 1) return study1_system();
  if (study == 2) return study2_system();
  throw Error("built-in plants are study 1 and study 2");
}

int cmd_simulate(const RunConfig& c, int study, int horizon, const std::vector<double>& x0_in,
                 const std::vector<double>& setpoints, double dwell, bool l_in_m) {
  const StateFeedbackController k = controller_from_json(read_json_file(c.controller));
  std::ostringstream os;
  if (study == 3) {
    const DiscParams prm = DiscParams::table(!l_in_m);
    std::array<double, 2> x0{0.0, 0.0};
    if (x0_in.size() == 2) x0 = {x0_in[0], x0_in[1]};
    const DiscTrajectory tr = simulate_disc(prm, k, setpoints, dwell, x0);
    os << "t,x_1,x_2,u_1,p_1,xss_1,xss_2\n" << std::setprecision(10);
    for (Eigen::Index i = 0; i < tr.u.cols(); ++i) {
      os << tr.t[i] << "," << tr.x(0, i) << "," << tr.x(1, i) << "," << tr.u(0, i) << ","
         << tr.p(0, i) << "," << tr.x_ss(0, i) << "," << tr.x_ss(1, i) << "\n";
    }
  } else {
    const LpvSs sys = c.plant.empty() ? builtin_plant(study) : lpv_from_json(read_json_file(c.plant));
    Vec x0 = Vec::Ones(sys.nx());
    if (!x0_in.empty()) {
      if (static_cast<int>(x0_in.size()) != sys.nx()) throw DimMismatch("--x0 needs n_x entries");
      x0 = Eigen::Map<const Vec>(x0_in.data(), sys.nx());
    }
    std::mt19937_64 rng(c.seed);
    Mat p(sys.np(), horizon);
    for (int t = 0; t < horizon; ++t) {
      for (int i = 0; i < sys.np(); ++i) {
        std::uniform_real_distribution<double> d(sys.p_set.lower(i), sys.p_set.upper(i));
        p(i, t) = d(rng);
      }
    }
    const ClosedLoopTrajectory tr = simulate_closed_loop(sys, k, x0, p);
    os << "t";
    for (int i = 0; i < sys.nx(); ++i) os << ",x_" << i + 1;
    for (int i = 0; i < sys.nu(); ++i) os << ",u_" << i + 1;
    for (int i = 0; i < sys.np(); ++i) os << ",p_" << i + 1;
    os << "\n" << std::setprecision(10);
    for (int t = 0; t < horizon; ++t) {
      os << t;
      for (int i = 0; i < sys.nx(); ++i) os << "," << tr.x(i, t);
      for (int i = 0; i < sys.nu(); ++i) os << "," << tr.u(i, t);
      for (int i = 0; i < sys.np(); ++i) os << "," << p(i, t);
      os << "\n";
    }
  }
  if (c.out.empty()) {
    std::cout << os.str();
  } else {
    write_text_file(c.out, os.str());
  }
  return kOk;
}

int cmd_generate(const RunConfig& c, int study, int n_cols, double noise_std, bool l_in_m) {
  std::string text;
  if (study == 3) {
    text = to_csv(disc_dictionary(DiscParams::table(!l_in_m), n_cols > 0 ? n_cols : 6, c.seed));
  } else {
    const LpvSs sys = builtin_plant(study);
    const int cols = n_cols > 0 ? n_cols : (study == 1 ? 9 : 15);
    const DataDictionary d = excite(sys, cols, c.seed);
    text = noise_std > 0.0 ? to_csv(add_noise(d, noise_std, c.seed + kNoiseSeedOffset)) : to_csv(d);
  }
  if (c.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(c.out, text);
  }
  return kOk;
}

int cmd_bench(const RunConfig& c, const std::string& which, const BenchOptions& opt) {
  std::vector<int> ids;
  if (which == "all") {
    ids = {1, 2, 3};
  } else {
    ids = {std::stoi(which)};
  }
  bool all = true;
  for (int id : ids) {
    std::string dir;
    if (!c.out.empty()) {
      dir = ids.size() > 1 ? (std::filesystem::path(c.out) / ("study" + std::to_string(id))).string()
                           : c.out;
    }
    const StudyReport rep = run_study(id, c.seed, dir, opt);
    for (const auto& chk : rep.checks) {
      std::cout << (chk.pass ? "PASS " : "FAIL ") << "study" << id << " " << chk.name << " = "
                << chk.value << "\n";
    }
    std::cout << "study" << id << (rep.all_pass() ? " PASS" : " FAIL") << "\n";
    all = all && rep.all_pass();
  }
  return all ? kOk : kInfeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Data-driven LPV state-feedback synthesis"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  RunConfig c;

  auto* pe = app.add_subcommand("check-pe", "Check persistency of excitation of a dictionary");
  pe->add_option("--data", c.data, "Data dictionary (.csv or .json)")->required();
  pe->add_option("--out", c.out, "Report path");

  auto* synth = app.add_subcommand("synth", "Synthesize a controller from data");
  synth->add_option("--mode", c.mode, "analyze|stabilize|quadratic|h2|l2|noisy")
      ->check(CLI::IsMember({"analyze", "stabilize", "quadratic", "h2", "l2", "noisy"}));
  add_synthesis_options(synth, c);
  synth->add_option("--seed", c.seed, "Seed of the verification simulations");

  auto* analyze = app.add_subcommand("analyze", "Certify a fixed controller from data");
  add_synthesis_options(analyze, c);
  analyze->add_option("--seed", c.seed, "Seed of the verification simulations");

  int study = 1;
  int horizon = 100;
  double dwell = 5.0;
  bool l_in_m = false;
  std::vector<double> x0;
  std::vector<double> setpoints = {0.0, std::numbers::pi / 2, -std::numbers::pi / 2};
  auto* sim = app.add_subcommand("simulate", "Closed-loop simulation to CSV");
  sim->add_option("--controller", c.controller, "Controller JSON")->required();
  sim->add_option("--plant", c.plant, "Plant JSON (defaults to the built-in study plant)");
  sim->add_option("--study", study, "Built-in plant: 1, 2 or 3 (nonlinear disc)")
      ->check(CLI::Range(1, 3));
  sim->add_option("--horizon", horizon, "Number of samples")->check(CLI::NonNegativeNumber);
  sim->add_option("--x0", x0, "Initial state (default all ones; disc at rest)");
  sim->add_option("--setpoints", setpoints, "Disc angle setpoints in rad");
  sim->add_option("--dwell", dwell, "Disc dwell time per setpoint in s");
  sim->add_flag("--disc-l-m", l_in_m, "Read the disc length as metres");
  sim->add_option("--seed", c.seed, "Seed of the scheduling sequence");
  sim->add_option("--out", c.out, "CSV path");

  int n_cols = 0;
  double noise_std = 0.0;
  auto* gen = app.add_subcommand("generate", "Generate a benchmark data dictionary");
  gen->add_option("--study", study, "1, 2 or 3")->check(CLI::Range(1, 3));
  gen->add_option("--n-cols", n_cols, "Regressor columns (records minus one)");
  gen->add_option("--noise-std", noise_std, "Measurement noise standard deviation (study 1 and 2)");
  gen->add_flag("--disc-l-m", l_in_m, "Read the disc length as metres");
  gen->add_option("--seed", c.seed, "Seed");
  gen->add_option("--out", c.out, "CSV path");

  std::string which = "all";
  BenchOptions bo;
  auto* bench = app.add_subcommand("bench", "Reproduce a benchmark study");
  bench->add_option("--study", which, "1, 2, 3 or all")->check(CLI::IsMember({"1", "2", "3", "all"}));
  bench->add_option("--seed", c.seed, "Seed");
  bench->add_option("--out", c.out, "Output directory");
  bench->add_option("--noise-std", bo.noise_std, "Study 2 noise standard deviation");
  bench->add_option("--dwell", bo.dwell, "Disc dwell time per setpoint in s");
  bench->add_flag("--disc-l-m", l_in_m, "Read the disc length as metres");
  add_solver_options(bench, c);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*pe) return cmd_check_pe(c);
    if (*synth) return cmd_synth(c);
    if (*analyze) {
      c.mode = "analyze";
      return cmd_synth(c);
    }
    if (*sim) return cmd_simulate(c, study, horizon, x0, setpoints, dwell, l_in_m);
    if (*gen) return cmd_generate(c, study, n_cols, noise_std, l_in_m);
    if (*bench) {
      bo.solver = c.solver;
      bo.l_in_mm = !l_in_m;
      return cmd_bench(c, which, bo);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error at line " << e.line() << ", column " << e.column() << ": "
              << e.what() << "\n";
    return kUsage;
  } catch (const RankDeficient& e) {
    std::cerr << "not persistently exciting: " << e.what() << "\n";
    return kNotPe;
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kUsage;
}
