#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "ddlpv/ddrep.hpp"
#include "ddlpv/lmi.hpp"

namespace ddlpv {

enum class Mode { Analyze, Stabilize, Quadratic, H2, L2, Noisy };

std::string to_string(Mode m);
/// Accepts analyze, stabilize, quadratic, h2, l2, noisy (and noisy-stabilize).
Mode mode_from_string(const std::string& s);

struct SynthesisRequest {
  Mode mode = Mode::Stabilize;
  std::optional<PerfWeights> weights;
  /// Fixed performance level; when absent gamma is minimized.
  std::optional<double> gamma;
  bool robust = false;
  double reg_lambda = 0.1;
  std::optional<Interval> trace_box;
  /// Quadratic mode objective direction on trace(P).
  bool maximize_trace = true;
  std::optional<double> eps_claim;
  bool self_check = true;
  SolverSettings solver;
};

/// Pins F22 = 0 and Ȳ = 0 so that the recovered K̄ vanishes.
SynthesisRequest apply_robust_restriction(SynthesisRequest r);

struct SynthesisCertificate {
  Mat p_mat;
  std::optional<FqMatrix> fq;
  Mat y0;
  Mat ybar;
  std::optional<Mat> s_mat;
  std::optional<double> gamma;
  std::optional<double> alpha;
  std::optional<double> eps_opt;
  std::vector<Mat> multipliers;
  std::vector<ResidualRow> residuals;
};

struct SynthesisResult {
  Mode mode = Mode::Stabilize;
  SolveStatus status = SolveStatus::NumericalFailure;
  StateFeedbackController ctrl;
  SynthesisCertificate cert;
  std::optional<bool> self_check;
  /// Noisy mode: eps_opt exceeds the claimed noise level.
  std::optional<bool> guaranteed;
  double objective = 0.0;
  SolverDiagnostics diagnostics;
  SolverSettings settings;
  std::string message;

  bool ok() const {
    return status == SolveStatus::Optimal || status == SolveStatus::Feasible;
  }
};

/// Where the closed-loop coefficients come from: measured data (X+ F_Q under
/// the coupling equality) or a known model ([𝒜 ℬ] M_CL with a free split of
/// the affine terms).
struct ClosedLoopSource {
  Mat dp;
  Mat xplus;
  const LpvSs* model = nullptr;
  Dims dims;

  static ClosedLoopSource from_data(const DataMatrices& dm);
  static ClosedLoopSource from_model(const LpvSs& sys);
  bool is_model() const { return model != nullptr; }
};

/// Builds and solves the LMI problem for the requested mode. With a fixed
/// controller, the gains are substituted (Y0 = K0 P, Ȳ = K̄ (I⊗P)) and the
/// problem becomes an analysis feasibility test.
SynthesisResult run_synthesis(const ClosedLoopSource& src, const Box& pset,
                              const SynthesisRequest& req,
                              const StateFeedbackController* fixed = nullptr);

SynthesisResult analyze_stability(const DataMatrices& dm,
                                  const StateFeedbackController& ctrl,
                                  const Box& pset, SolverSettings settings = {});
SynthesisResult synth_stabilizing(const DataMatrices& dm, const Box& pset,
                                  SynthesisRequest req = {});
SynthesisResult synth_quadratic(const DataMatrices& dm, const Box& pset,
                                SynthesisRequest req);
SynthesisResult synth_h2(const DataMatrices& dm, const Box& pset,
                         SynthesisRequest req);
SynthesisResult synth_l2(const DataMatrices& dm, const Box& pset,
                         SynthesisRequest req);

/// Convexified noisy-data synthesis maximizing alpha.
SynthesisResult synth_noisy_stabilizing(const NoisyMatrices& nm, const Box& pset,
                                        SynthesisRequest req = {});
/// The noisy-data conditions with the controller fixed.
SynthesisResult analyze_noisy(const NoisyMatrices& nm,
                              const StateFeedbackController& ctrl,
                              const Box& pset, SolverSettings settings = {});

double eps_from_alpha(double alpha);

/// Threshold on cond(P) above which controller extraction is rejected.
constexpr double kMaxConditionP = 1e10;

nlohmann::json to_json(const SynthesisResult& r);

}  // namespace ddlpv
