#pragma once

#include <array>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ddlpv/verification.hpp"

namespace ddlpv {

LpvSs study1_system();
LpvSs study2_system(double alpha = 0.53);

/// Unbalanced disc parameters in SI units.
struct DiscParams {
  double g = 9.8;
  double j = 2.2e-4;
  double k_m = 15.3;
  double l = 0.42e-3;
  double m = 0.07;
  double tau = 0.6;
  double t_s = 0.01;

  /// Tabulated values with l read as 0.42 mm, or as 0.42 m when l_in_mm is false.
  static DiscParams table(bool l_in_mm = true);
  void validate() const;
  /// m g l / J.
  double gravity_gain() const { return m * g * l / j; }
};

constexpr int kDiscSubsteps = 10;
/// Range of sin(theta)/theta over the reals, rounded as in the embedding.
constexpr double kSincLower = -0.22;
/// The noisy study-2 branch seeds its noise with seed + kNoiseSeedOffset.
constexpr unsigned long long kNoiseSeedOffset = 1000;

/// One sample period of the disc ODE by RK4 with the input held constant.
std::array<double, 2> disc_step(const DiscParams& prm, double theta, double omega, double u,
                                int substeps = kDiscSubsteps);

double sinc(double theta);
/// sinc(theta) mapped affinely from [-0.22, 1] onto [-1, 1].
double disc_scheduling(double theta);
/// Input holding the disc at rest at theta_ss.
double disc_equilibrium_input(const DiscParams& prm, double theta_ss);

/// Records from the nonlinear disc under uniform random input; p is computed
/// from the measured angle.
DataDictionary disc_dictionary(const DiscParams& prm, int n_cols, unsigned long long seed,
                               Interval u_range = {-10.0, 10.0});

/// Affine LPV model read off noise-free data, [A B] = X+ Dp^†.
LpvSs lpv_surrogate(const DataMatrices& dm, const Box& pset);

/// Forward-Euler LPV embedding of the disc in the scaled scheduling variable.
LpvSs disc_euler_model(const DiscParams& prm);

struct DiscTrajectory {
  std::vector<double> t;
  Mat x;  // 2 x (N+1)
  Mat u;  // 1 x N
  Mat p;  // 1 x N
  Mat x_ss;  // 2 x N
};

/// Closed loop of the nonlinear disc: each setpoint is held for dwell
/// seconds, u = K(p)(x - x_ss) + u_eq(theta_ss).
DiscTrajectory simulate_disc(const DiscParams& prm, const StateFeedbackController& ctrl,
                             const std::vector<double>& setpoints, double dwell,
                             std::array<double, 2> x0 = {0.0, 0.0});

struct BenchCheck {
  std::string name;
  double value = 0.0;
  double target = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  /// "reference" for a printed value with a band, "property" for a derived bound.
  std::string kind;
  bool pass = false;
};

struct StudyReport {
  int study = 0;
  unsigned long long seed = 0;
  nlohmann::json report;
  std::vector<BenchCheck> checks;
  std::vector<std::string> files;

  bool all_pass() const;
};

struct BenchOptions {
  SolverSettings solver;
  bool l_in_mm = true;
  double noise_std = 0.1;
  double dwell = 5.0;
  int grid_total = 250;
};

/// Runs one study end to end and writes report.json, dictionary.csv and
/// trajectories/*.csv into out_dir (skipped when out_dir is empty).
StudyReport run_study(int id, unsigned long long seed, const std::string& out_dir,
                      const BenchOptions& opt = {});

nlohmann::json to_json(const BenchCheck& c);
nlohmann::json to_json(const StudyReport& r);

}  // namespace ddlpv
