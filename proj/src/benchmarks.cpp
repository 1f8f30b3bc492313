#include "ddlpv/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace ddlpv {

LpvSs study1_system() {
  LpvSs s;
  Mat a0(2, 2), a1(2, 2), b0(2, 1);
  a0 << 0.2485, -1.0355, 0.8910, 0.4065;
  a1 << -0.0063, -0.0938, 0.0, 0.0188;
  b0 << 0.3190, -1.3080;
  s.a = {a0, a1, a1};
  s.b = {b0, Mat::Zero(2, 1), Mat::Zero(2, 1)};
  s.p_set = Box::symmetric(2);
  return s;
}

LpvSs study2_system(double alpha) {
  LpvSs s;
  Mat a0(4, 4);
  a0 << 0.8, -0.25, 0.0, 1.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.2, 0.03,
        0.0, 0.0, 1.0, 0.0;
  Mat a1 = Mat::Zero(4, 4);
  a1.row(2) << 0.8 * alpha, -0.5 * alpha, 0.0, alpha;
  Mat b0(4, 1), b2(4, 1);
  b0 << 0.5, 0.0, 0.5, 0.0;
  b2 << 0.5, 0.0, -0.5, 0.0;
  s.a = {a0, a1, Mat::Zero(4, 4)};
  s.b = {b0, Mat::Zero(4, 1), b2};
  s.p_set = Box::symmetric(2);
  return s;
}

DiscParams DiscParams::table(bool l_in_mm) {
  DiscParams p;
  p.l = l_in_mm ? 0.42e-3 : 0.42;
  return p;
}

void DiscParams::validate() const {
  for (double v : {g, j, k_m, l, m, tau, t_s}) {
    if (!(v > 0.0) || !std::isfinite(v)) throw Error("disc parameters must be positive");
  }
}

std::array<double, 2> disc_step(const DiscParams& prm, double theta, double omega, double u,
                                int substeps) {
  if (!std::isfinite(theta) || !std::isfinite(omega) || !std::isfinite(u)) {
    throw NonFiniteState("disc state or input is not finite");
  }
  const double c = prm.gravity_gain();
  auto f = [&](double th, double om) {
    return std::array<double, 2>{om, -c * std::sin(th) - om / prm.tau + prm.k_m / prm.tau * u};
  };
  const double h = prm.t_s / substeps;
  for (int i = 0; i < substeps; ++i) {
    const auto k1 = f(theta, omega);
    const auto k2 = f(theta + 0.5 * h * k1[0], omega + 0.5 * h * k1[1]);
    const auto k3 = f(theta + 0.5 * h * k2[0], omega + 0.5 * h * k2[1]);
    const auto k4 = f(theta + h * k3[0], omega + h * k3[1]);
    theta += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
    omega += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
  }
  if (!std::isfinite(theta) || !std::isfinite(omega) ||
      std::abs(omega) > kOverflowGuard || std::abs(theta) > kOverflowGuard) {
    throw NonFiniteState("disc state left the finite range");
  }
  return {theta, omega};
}

double sinc(double theta) {
  if (std::abs(theta) < 1e-8) return 1.0 - theta * theta / 6.0;
  return std::sin(theta) / theta;
}

double disc_scheduling(double theta) {
  return (2.0 * sinc(theta) - (1.0 + kSincLower)) / (1.0 - kSincLower);
}

double disc_equilibrium_input(const DiscParams& prm, double theta_ss) {
  return prm.tau * prm.m * prm.g * prm.l / (prm.j * prm.k_m) * std::sin(theta_ss);
}

DataDictionary disc_dictionary(const DiscParams& prm, int n_cols, unsigned long long seed,
                               Interval u_range) {
  prm.validate();
  if (n_cols < 1) throw Error("dictionary needs at least one column");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> du(u_range.lo, u_range.hi);
  std::uniform_real_distribution<double> dx(-1.0, 1.0);
  DataDictionary d;
  d.seed = seed;
  d.x.resize(2, n_cols + 1);
  d.u.resize(1, n_cols + 1);
  d.p.resize(1, n_cols + 1);
  double theta = dx(rng), omega = dx(rng);
  for (int k = 0; k <= n_cols; ++k) {
    d.x(0, k) = theta;
    d.x(1, k) = omega;
    d.p(0, k) = disc_scheduling(theta);
    d.u(0, k) = du(rng);
    const auto next = disc_step(prm, theta, omega, d.u(0, k));
    theta = next[0];
    omega = next[1];
  }
  return d;
}

LpvSs lpv_surrogate(const DataMatrices& dm, const Box& pset) {
  const OpenLoopRep rep = open_loop_rep(dm);
  const Mat ab = rep.xplus * rep.dp_pinv;
  const int nx = dm.nx(), nu = dm.nu(), np = dm.np();
  LpvSs s;
  for (int i = 0; i <= np; ++i) s.a.push_back(ab.middleCols(i * nx, nx));
  const int off = nx * (1 + np);
  for (int i = 0; i <= np; ++i) s.b.push_back(ab.middleCols(off + i * nu, nu));
  s.p_set = pset;
  return s;
}

LpvSs disc_euler_model(const DiscParams& prm) {
  const double c = prm.gravity_gain(), ts = prm.t_s;
  const double mid = 0.5 * (1.0 + kSincLower), half = 0.5 * (1.0 - kSincLower);
  LpvSs s;
  Mat a0(2, 2), a1 = Mat::Zero(2, 2), b0(2, 1);
  a0 << 1.0, ts, -ts * c * mid, 1.0 - ts / prm.tau;
  a1(1, 0) = -ts * c * half;
  b0 << 0.0, ts * prm.k_m / prm.tau;
  s.a = {a0, a1};
  s.b = {b0, Mat::Zero(2, 1)};
  s.p_set = Box::symmetric(1);
  return s;
}

DiscTrajectory simulate_disc(const DiscParams& prm, const StateFeedbackController& ctrl,
                             const std::vector<double>& setpoints, double dwell,
                             std::array<double, 2> x0) {
  prm.validate();
  if (ctrl.nx() != 2 || ctrl.nu() != 1 || ctrl.np() != 1) {
    throw DimMismatch("disc controller must have n_x = 2, n_u = 1, n_p = 1");
  }
  const int per = static_cast<int>(std::llround(dwell / prm.t_s));
  const int n = per * static_cast<int>(setpoints.size());
  DiscTrajectory tr;
  tr.x.resize(2, n + 1);
  tr.u.resize(1, n);
  tr.p.resize(1, n);
  tr.x_ss.resize(2, n);
  tr.t.resize(n + 1);
  double theta = x0[0], omega = x0[1];
  tr.x.col(0) << theta, omega;
  tr.t[0] = 0.0;
  for (int k = 0; k < n; ++k) {
    const double ths = setpoints[k / per];
    Vec p(1);
    p(0) = disc_scheduling(theta);
    Vec e(2);
    e << theta - ths, omega;
    const double u = (eval_k(ctrl, p) * e)(0) + disc_equilibrium_input(prm, ths);
    tr.u(0, k) = u;
    tr.p(0, k) = p(0);
    tr.x_ss.col(k) << ths, 0.0;
    const auto next = disc_step(prm, theta, omega, u);
    theta = next[0];
    omega = next[1];
    tr.x.col(k + 1) << theta, omega;
    tr.t[k + 1] = (k + 1) * prm.t_s;
  }
  return tr;
}

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

BenchCheck band_check(const std::string& name, double value, double target, double rel) {
  const double lo = target * (1.0 - rel), hi = target * (1.0 + rel);
  return {name, value, target, lo, hi, "reference", value >= lo && value <= hi};
}

BenchCheck abs_check(const std::string& name, double value, double target, double tol,
                     const std::string& kind = "reference") {
  return {name, value, target, target - tol, target + tol, kind,
          std::abs(value - target) <= tol};
}

BenchCheck le_check(const std::string& name, double value, double bound) {
  return {name, value, bound, -kInf, bound, "property", value <= bound};
}

BenchCheck flag_check(const std::string& name, bool ok) {
  return {name, ok ? 1.0 : 0.0, 1.0, 1.0, 1.0, "property", ok};
}

Mat row(std::initializer_list<double> v) {
  Mat m(1, static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

StateFeedbackController gains(std::initializer_list<std::initializer_list<double>> ks) {
  StateFeedbackController c;
  for (const auto& k : ks) c.k.push_back(row(k));
  return c;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

/// Columns t, x_i, u_i, p_i and optional setpoint columns xss_i, one row per step.
std::string trajectory_csv(const std::vector<double>& t, const Mat& x, const Mat& u,
                           const Mat& p, const std::optional<Mat>& x_ss = std::nullopt) {
  std::ostringstream os;
  os << "t";
  for (int i = 0; i < x.rows(); ++i) os << ",x_" << i + 1;
  for (int i = 0; i < u.rows(); ++i) os << ",u_" << i + 1;
  for (int i = 0; i < p.rows(); ++i) os << ",p_" << i + 1;
  if (x_ss) {
    for (int i = 0; i < x_ss->rows(); ++i) os << ",xss_" << i + 1;
  }
  os << "\n";
  for (int k = 0; k < u.cols(); ++k) {
    os << fmt(t[k]);
    for (int i = 0; i < x.rows(); ++i) os << "," << fmt(x(i, k));
    for (int i = 0; i < u.rows(); ++i) os << "," << fmt(u(i, k));
    for (int i = 0; i < p.rows(); ++i) os << "," << fmt(p(i, k));
    if (x_ss) {
      for (int i = 0; i < x_ss->rows(); ++i) os << "," << fmt((*x_ss)(i, k));
    }
    os << "\n";
  }
  return os.str();
}

Mat random_schedule(const Box& box, int horizon, std::mt19937_64& rng) {
  Mat p(box.dim(), horizon);
  for (int k = 0; k < horizon; ++k) {
    for (int i = 0; i < box.dim(); ++i) {
      std::uniform_real_distribution<double> d(box.lower(i), box.upper(i));
      p(i, k) = d(rng);
    }
  }
  return p;
}

class StudyWriter {
 public:
  StudyWriter(StudyReport& rep, const std::string& out_dir) : rep_(rep), dir_(out_dir) {
    if (!dir_.empty()) std::filesystem::create_directories(std::filesystem::path(dir_) / "trajectories");
  }

  void file(const std::string& rel, const std::string& text) {
    rep_.files.push_back(rel);
    if (dir_.empty()) return;
    std::ofstream f(std::filesystem::path(dir_) / rel, std::ios::binary);
    if (!f) throw Error("cannot write " + rel);
    f << text;
  }

  void finish() {
    if (dir_.empty()) return;
    std::ofstream f(std::filesystem::path(dir_) / "report.json", std::ios::binary);
    if (!f) throw Error("cannot write report.json");
    f << to_json(rep_).dump(2) << "\n";
  }

 private:
  StudyReport& rep_;
  std::string dir_;
};

/// Closed loop of an LPV benchmark plant under random scheduling from x0 = 1.
std::string lpv_trajectory(const LpvSs& sys, const StateFeedbackController& ctrl, int horizon,
                           unsigned long long seed) {
  std::mt19937_64 rng(seed);
  const Mat p = random_schedule(sys.p_set, horizon, rng);
  const ClosedLoopTrajectory tr = simulate_closed_loop(sys, ctrl, Vec::Ones(sys.nx()), p);
  std::vector<double> t(horizon);
  for (int k = 0; k < horizon; ++k) t[k] = k;
  return trajectory_csv(t, tr.x, tr.u, p);
}

json controller_entry(const SynthesisResult& r, const LpvSs& truth,
                      const std::optional<PerfWeights>& w, const VerifyOptions& vo,
                      std::optional<VerifyReport>* out = nullptr) {
  json j = to_json(r);
  if (r.ok()) {
    const VerifyReport v = verify(truth, r.ctrl, w, r.cert.p_mat, vo);
    j["verify"] = to_json(v);
    if (out) *out = v;
  }
  return j;
}

constexpr int kTrajectoryHorizon = 60;

void study1(StudyReport& rep, StudyWriter& out, unsigned long long seed, const BenchOptions& opt) {
  const LpvSs sys = study1_system();
  const DataDictionary d = excite(sys, 9, seed);
  const DataMatrices dm = build_matrices(d);
  const PeReport pe = check_pe(dm);
  rep.report["dictionary"] = {{"n_d", d.nd()}, {"rank", pe.rank}, {"required", pe.required},
                              {"is_pe", pe.is_pe}, {"file", "dictionary.csv"}};
  out.file("dictionary.csv", to_csv(d));
  rep.checks.push_back(flag_check("persistently exciting", pe.is_pe));

  SynthesisRequest req;
  req.mode = Mode::Quadratic;
  req.weights = PerfWeights{Mat::Identity(2, 2), Mat::Identity(1, 1)};
  req.robust = true;
  req.solver = opt.solver;
  const SynthesisResult dd = synth_quadratic(dm, sys.p_set, req);
  const SynthesisResult mb = model_synth(sys, sys.p_set, req);
  VerifyOptions vo;
  vo.grid_total = opt.grid_total;
  vo.seed = seed;
  rep.report["controllers"]["data_driven"] = controller_entry(dd, sys, req.weights, vo);
  rep.report["controllers"]["model_based"] = controller_entry(mb, sys, req.weights, vo);
  rep.checks.push_back(flag_check("data-driven synthesis feasible", dd.ok()));
  rep.checks.push_back(flag_check("model-based synthesis feasible", mb.ok()));
  if (!dd.ok() || !mb.ok()) return;

  rep.checks.push_back(abs_check("K0[0]", dd.ctrl.k[0](0, 0), 0.4832, 1e-2));
  rep.checks.push_back(abs_check("K0[1]", dd.ctrl.k[0](0, 1), 0.4839, 1e-2));
  rep.checks.push_back(le_check("norm Kbar", dd.ctrl.kbar().norm(), 1e-6));
  rep.checks.push_back(le_check("data vs model K0 difference",
                                (dd.ctrl.k[0] - mb.ctrl.k[0]).cwiseAbs().maxCoeff(), 1e-2));
  rep.checks.push_back(flag_check("certificate re-verifies on the model",
                                  model_analyze_stability(sys, dd.ctrl, sys.p_set, opt.solver).ok()));
  rep.checks.push_back(le_check("grid spectral radius",
                                grid_spectral_radius(sys, dd.ctrl, GridSpec(10, sys.p_set)).value,
                                1.0));
  out.file("trajectories/data_driven.csv", lpv_trajectory(sys, dd.ctrl, kTrajectoryHorizon, seed));
  out.file("trajectories/model_based.csv", lpv_trajectory(sys, mb.ctrl, kTrajectoryHorizon, seed));
}

void study2_noisy(StudyReport& rep, StudyWriter& out, const LpvSs& sys, unsigned long long seed,
                  const BenchOptions& opt) {
  const DataDictionary clean = excite(sys, 25, seed);
  const NoisyDictionary nd = add_noise(clean, opt.noise_std, kNoiseSeedOffset + seed);
  const NoisyMatrices nm = build_noisy_matrices(nd);
  const double eps = epsilon_bound(sys, nd);
  out.file("dictionary_noisy.csv", to_csv(nd));
  SynthesisRequest req;
  req.mode = Mode::Noisy;
  req.eps_claim = eps;
  req.solver = opt.solver;
  const SynthesisResult r = synth_noisy_stabilizing(nm, sys.p_set, req);
  json j = to_json(r);
  j["eps"] = eps;
  j["noise_std"] = opt.noise_std;
  j["noise_seed"] = kNoiseSeedOffset + seed;
  rep.checks.push_back({"noise level eps", eps, 0.2172, 0.05, 0.6, "reference",
                        eps >= 0.05 && eps <= 0.6});
  rep.checks.push_back(flag_check("noisy synthesis feasible", r.ok()));
  if (r.ok()) {
    const double rho = grid_spectral_radius(sys, r.ctrl, GridSpec(10, sys.p_set)).value;
    j["true_plant_grid_rho"] = rho;
    rep.checks.push_back({"alpha", *r.cert.alpha, 0.0, 0.0, kInf, "property", *r.cert.alpha > 0.0});
    rep.checks.push_back(le_check("true plant grid spectral radius", rho, 1.0));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, opt.noise_std);
    const Mat p = random_schedule(sys.p_set, kTrajectoryHorizon, rng);
    Mat x(sys.nx(), kTrajectoryHorizon + 1), u(sys.nu(), kTrajectoryHorizon);
    x.col(0) = Vec::Ones(sys.nx());
    std::vector<double> t(kTrajectoryHorizon);
    for (int k = 0; k < kTrajectoryHorizon; ++k) {
      Vec z = x.col(k);
      for (int i = 0; i < z.size(); ++i) z(i) += noise(rng);
      const Vec pk = p.col(k);
      u.col(k) = eval_k(r.ctrl, pk) * z;
      x.col(k + 1) = eval_a(sys, pk) * x.col(k) + eval_b(sys, pk) * u.col(k);
      t[k] = k;
    }
    out.file("trajectories/noisy.csv", trajectory_csv(t, x, u, p));
  }
  rep.report["controllers"]["noisy"] = j;
}

void study2(StudyReport& rep, StudyWriter& out, unsigned long long seed, const BenchOptions& opt) {
  const LpvSs sys = study2_system();
  const DataDictionary d = excite(sys, 15, seed);
  const DataMatrices dm = build_matrices(d);
  const PeReport pe = check_pe(dm);
  rep.report["dictionary"] = {{"n_d", d.nd()}, {"rank", pe.rank}, {"required", pe.required},
                              {"is_pe", pe.is_pe}, {"file", "dictionary.csv"}};
  out.file("dictionary.csv", to_csv(d));
  rep.checks.push_back(flag_check("persistently exciting", pe.is_pe));
  VerifyOptions vo;
  vo.grid_total = opt.grid_total;
  vo.seed = seed;
  const GridSpec grid100(10, sys.p_set);
  const GridSpec grid250 = GridSpec::with_total(sys.p_set, opt.grid_total);
  const PerfWeights w{Mat::Identity(4, 4), Mat::Identity(1, 1)};

  SynthesisRequest stab;
  stab.mode = Mode::Stabilize;
  stab.trace_box = Interval{0.1, 10.0};
  stab.solver = opt.solver;
  const SynthesisResult s_dd = synth_stabilizing(dm, sys.p_set, stab);
  const SynthesisResult s_mb = model_synth(sys, sys.p_set, stab);
  rep.report["controllers"]["stabilizing_data_driven"] = controller_entry(s_dd, sys, std::nullopt, vo);
  rep.report["controllers"]["stabilizing_model_based"] = controller_entry(s_mb, sys, std::nullopt, vo);
  for (const auto& [name, r] : {std::pair{"data-driven", &s_dd}, std::pair{"model-based", &s_mb}}) {
    const std::string n = name;
    rep.checks.push_back(flag_check("stabilizing " + n + " feasible", r->ok()));
    if (!r->ok()) continue;
    rep.checks.push_back(flag_check("stabilizing " + n + " vertex analysis",
                                    model_analyze_stability(sys, r->ctrl, sys.p_set, opt.solver).ok()));
    rep.checks.push_back(le_check("stabilizing " + n + " grid spectral radius",
                                  grid_spectral_radius(sys, r->ctrl, grid100).value, 1.0));
    out.file("trajectories/stabilizing_" + std::string(n == "data-driven" ? "data_driven" : "model_based") + ".csv",
             lpv_trajectory(sys, r->ctrl, kTrajectoryHorizon, seed));
  }
  const StateFeedbackController ref_dd = gains({{-0.2553, 0.1265, -0.3894, -0.4131},
                                                {-0.3066, 0.1611, -0.0445, -0.4056},
                                                {-0.0844, 0.0389, -0.0652, -0.1650}});
  const StateFeedbackController ref_mb = gains({{-0.2447, 0.0990, -0.4591, -0.4232},
                                                {-0.3120, 0.2052, 0.0132, -0.3834},
                                                {-0.0676, 0.0362, -0.0683, -0.1451}});
  rep.checks.push_back(flag_check("reference data-driven gains pass vertex analysis",
                                  model_analyze_stability(sys, ref_dd, sys.p_set, opt.solver).ok()));
  rep.checks.push_back(flag_check("reference model-based gains pass vertex analysis",
                                  model_analyze_stability(sys, ref_mb, sys.p_set, opt.solver).ok()));

  SynthesisRequest quad;
  quad.mode = Mode::Quadratic;
  quad.weights = w;
  quad.solver = opt.solver;
  const SynthesisResult q_dd = synth_quadratic(dm, sys.p_set, quad);
  const SynthesisResult q_mb = model_synth(sys, sys.p_set, quad);
  SynthesisRequest quad_min = quad;
  quad_min.maximize_trace = false;
  const SynthesisResult q_min = synth_quadratic(dm, sys.p_set, quad_min);
  rep.report["controllers"]["quadratic_data_driven"] = controller_entry(q_dd, sys, w, vo);
  rep.report["controllers"]["quadratic_model_based"] = controller_entry(q_mb, sys, w, vo);
  rep.report["controllers"]["quadratic_min_trace"] = controller_entry(q_min, sys, w, vo);
  rep.checks.push_back(flag_check("quadratic data-driven feasible", q_dd.ok()));
  rep.checks.push_back(flag_check("quadratic model-based feasible", q_mb.ok()));
  if (q_dd.ok()) {
    rep.checks.push_back(band_check("quadratic data-driven grid H2",
                                    grid_h2_norm(sys, q_dd.ctrl, w, grid250).value, 5.27, 0.15));
    out.file("trajectories/quadratic_data_driven.csv",
             lpv_trajectory(sys, q_dd.ctrl, kTrajectoryHorizon, seed));
  }
  if (q_mb.ok()) {
    rep.checks.push_back(band_check("quadratic model-based grid H2",
                                    grid_h2_norm(sys, q_mb.ctrl, w, grid250).value, 5.79, 0.15));
    out.file("trajectories/quadratic_model_based.csv",
             lpv_trajectory(sys, q_mb.ctrl, kTrajectoryHorizon, seed));
  }

  SynthesisRequest h2 = quad;
  h2.mode = Mode::H2;
  const SynthesisResult h_dd = synth_h2(dm, sys.p_set, h2);
  rep.report["controllers"]["h2_data_driven"] = controller_entry(h_dd, sys, w, vo);
  rep.checks.push_back(flag_check("h2 data-driven feasible", h_dd.ok()));
  if (h_dd.ok()) {
    rep.checks.push_back(le_check("h2 grid H2 within certified gamma",
                                  grid_h2_norm(sys, h_dd.ctrl, w, grid250).value,
                                  *h_dd.cert.gamma * (1.0 + 1e-3)));
  }
  study2_noisy(rep, out, sys, seed, opt);
}

void study3(StudyReport& rep, StudyWriter& out, unsigned long long seed, const BenchOptions& opt) {
  const DiscParams prm = DiscParams::table(opt.l_in_mm);
  const DataDictionary d = disc_dictionary(prm, 6, seed);
  const DataMatrices dm = build_matrices(d);
  const PeReport pe = check_pe(dm);
  rep.report["dictionary"] = {{"n_d", d.nd()}, {"rank", pe.rank}, {"required", pe.required},
                              {"is_pe", pe.is_pe}, {"file", "dictionary.csv"}};
  rep.report["disc"] = {{"g", prm.g}, {"j", prm.j}, {"k_m", prm.k_m}, {"l", prm.l},
                        {"m", prm.m}, {"tau", prm.tau}, {"t_s", prm.t_s},
                        {"substeps", kDiscSubsteps}, {"dwell", opt.dwell}};
  out.file("dictionary.csv", to_csv(d));
  rep.checks.push_back(flag_check("persistently exciting", pe.is_pe));
  const Box pset = Box::symmetric(1);
  const LpvSs sur = lpv_surrogate(dm, pset);
  rep.report["surrogate"] = to_json(sur);

  const Mat xs = simulate(sur, d.x.col(0), d.u.leftCols(d.nd() - 1), d.p.leftCols(d.nd() - 1));
  rep.checks.push_back(le_check("embedding error over the data horizon",
                                (xs - d.x).cwiseAbs().maxCoeff(), 1e-6));

  struct Spec {
    std::string name;
    Mode mode;
    double r;
    std::optional<std::array<double, 3>> table;
  };
  const std::vector<Spec> specs = {
      {"controller_1", Mode::Quadratic, 0.5, std::nullopt},
      {"controller_2", Mode::H2, 0.05, std::array<double, 3>{11.6, 11.6, 54.7}},
      {"controller_3", Mode::L2, 0.005, std::array<double, 3>{36.0, 13.6, 35.6}}};
  const std::vector<double> setpoints = {0.0, std::numbers::pi / 2, -std::numbers::pi / 2};
  const GridSpec grid = GridSpec::with_total(pset, opt.grid_total);
  VerifyOptions vo;
  vo.grid_total = opt.grid_total;
  vo.seed = seed;
  for (const Spec& sp : specs) {
    SynthesisRequest req;
    req.mode = sp.mode;
    Mat q(2, 2);
    q << 8.0, 0.0, 0.0, 0.1;
    req.weights = PerfWeights{q, Mat::Constant(1, 1, sp.r)};
    req.solver = opt.solver;
    const SynthesisResult r = run_synthesis(ClosedLoopSource::from_data(dm), pset, req);
    std::optional<VerifyReport> v;
    json j = controller_entry(r, sur, req.weights, vo, &v);
    rep.checks.push_back(flag_check(sp.name + " feasible", r.ok()));
    if (!r.ok()) {
      rep.report["controllers"][sp.name] = j;
      continue;
    }
    const double h2 = v->grid_h2 ? v->grid_h2->value : kInf;
    const double hinf = v->grid_hinf ? v->grid_hinf->value : kInf;
    j["table"] = {{"gamma", r.cert.gamma ? json(*r.cert.gamma) : json(nullptr)},
                  {"grid_h2", h2}, {"grid_hinf", hinf}};
    if (sp.table) {
      rep.checks.push_back(band_check(sp.name + " gamma", *r.cert.gamma, (*sp.table)[0], 0.25));
      rep.checks.push_back(band_check(sp.name + " grid H2", h2, (*sp.table)[1], 0.25));
      rep.checks.push_back(band_check(sp.name + " grid Hinf", hinf, (*sp.table)[2], 0.25));
    }
    try {
      const DiscTrajectory tr = simulate_disc(prm, r.ctrl, setpoints, opt.dwell);
      const int per = static_cast<int>(tr.u.cols() / static_cast<long>(setpoints.size()));
      json errs = json::array();
      for (size_t s = 0; s < setpoints.size(); ++s) {
        const int k = per * static_cast<int>(s + 1);
        const double err = std::abs(tr.x(0, k) - setpoints[s]);
        errs.push_back(err);
        rep.checks.push_back(le_check(sp.name + " terminal error at " + fmt(setpoints[s]), err, 0.05));
      }
      j["terminal_errors"] = errs;
      out.file("trajectories/" + sp.name + ".csv",
               trajectory_csv(tr.t, tr.x, tr.u, tr.p, tr.x_ss));
    } catch (const NonFiniteState& e) {
      j["simulation_error"] = e.what();
      rep.checks.push_back(flag_check(sp.name + " simulation bounded", false));
    }
    rep.report["controllers"][sp.name] = j;
  }
}

}  // namespace

bool StudyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const BenchCheck& c) { return c.pass; });
}

StudyReport run_study(int id, unsigned long long seed, const std::string& out_dir,
                      const BenchOptions& opt) {
  StudyReport rep;
  rep.study = id;
  rep.seed = seed;
  rep.report = json::object();
  StudyWriter out(rep, out_dir);
  switch (id) {
    case 1: study1(rep, out, seed, opt); break;
    case 2: study2(rep, out, seed, opt); break;
    case 3: study3(rep, out, seed, opt); break;
    default: throw Error("unknown study id " + std::to_string(id));
  }
  rep.report["solver"] = to_json(opt.solver);
  out.finish();
  return rep;
}

nlohmann::json to_json(const BenchCheck& c) {
  return {{"name", c.name}, {"value", c.value}, {"target", c.target}, {"lo", c.lo},
          {"hi", c.hi}, {"kind", c.kind}, {"pass", c.pass}};
}

nlohmann::json to_json(const StudyReport& r) {
  json j;
  j["study"] = r.study;
  j["seed"] = r.seed;
  j["pass"] = r.all_pass();
  j["results"] = r.report;
  j["checks"] = json::array();
  for (const auto& c : r.checks) j["checks"].push_back(to_json(c));
  j["files"] = r.files;
  return j;
}

}  // namespace ddlpv
