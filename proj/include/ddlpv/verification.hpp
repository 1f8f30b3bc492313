#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "ddlpv/synthesis.hpp"

namespace ddlpv {

/// Equidistant tensor grid over the scheduling box.
struct GridSpec {
  int points_per_axis = 2;
  Box pset;

  GridSpec() = default;
  GridSpec(int per_axis, Box box);
  /// Smallest per-axis count whose tensor grid has at least total points.
  static GridSpec with_total(const Box& box, int total);
  int size() const;
  /// Points in lexicographic order (first coordinate slowest).
  std::vector<Vec> points() const;
};

struct GridResult {
  double value = 0.0;
  Vec argmax;
};

/// Lemma-style model-based analysis with constant P at the vertices.
SynthesisResult model_analyze_stability(const LpvSs& sys,
                                        const StateFeedbackController& ctrl,
                                        const Box& pset, SolverSettings settings = {});

/// Model-based counterpart of the data-driven synthesis modes.
SynthesisResult model_synth(const LpvSs& sys, const Box& pset, SynthesisRequest req);

GridResult grid_spectral_radius(const LpvSs& sys, const StateFeedbackController& ctrl,
                                const GridSpec& grid);

/// Frozen-p H2 norm of x+ = A_CL x + w, z = C(p) x.
double frozen_h2_norm(const Mat& a, const Mat& c);
GridResult grid_h2_norm(const LpvSs& sys, const StateFeedbackController& ctrl,
                        const PerfWeights& w, const GridSpec& grid);

/// Frozen-p H-infinity norm of x+ = A x + w, z = C x.
double frozen_hinf_norm(const Mat& a, const Mat& c, double rel_tol = 1e-4);
GridResult grid_hinf_norm(const LpvSs& sys, const StateFeedbackController& ctrl,
                          const PerfWeights& w, const GridSpec& grid);

/// Largest ||z||/||w|| over random disturbances and scheduling sequences,
/// starting from x0 = 0.
double simulated_l2_gain(const LpvSs& sys, const StateFeedbackController& ctrl,
                         const PerfWeights& w, int trials, int horizon,
                         unsigned long long seed);

struct LyapunovCheck {
  bool pass = true;
  /// Largest (V(x+) - V(x)) / V(x) seen; negative on pass.
  double worst_margin = -1.0;
  int steps_checked = 0;
};

/// Checks strict decrease of x' P^{-1} x along each trajectory (states as
/// columns) until the state norm drops below floor.
LyapunovCheck lyapunov_decrease_check(const Mat& p_mat, const std::vector<Mat>& trajectories,
                                      double floor = 1e-9);

/// Closed-loop trajectories from random unit initial states under random
/// scheduling in the box.
std::vector<Mat> random_trajectories(const LpvSs& sys, const StateFeedbackController& ctrl,
                                     const Box& pset, int count, int horizon,
                                     unsigned long long seed);

struct VerifyReport {
  GridResult grid_rho;
  std::optional<GridResult> grid_h2;
  std::optional<GridResult> grid_hinf;
  std::optional<double> sim_l2;
  std::optional<LyapunovCheck> lyap;
};

struct VerifyOptions {
  int grid_total = 250;
  int l2_trials = 50;
  int l2_horizon = 200;
  int lyap_trajectories = 20;
  int lyap_horizon = 200;
  unsigned long long seed = 1;
};

/// Runs every validator that applies; norms are skipped (left empty) when the
/// frozen closed loop is unstable somewhere on the grid.
VerifyReport verify(const LpvSs& sys, const StateFeedbackController& ctrl,
                    const std::optional<PerfWeights>& w, const std::optional<Mat>& p_mat,
                    const VerifyOptions& opt = {});

nlohmann::json to_json(const GridResult& g);
nlohmann::json to_json(const VerifyReport& v);

}  // namespace ddlpv
