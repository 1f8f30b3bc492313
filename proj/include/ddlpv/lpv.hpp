#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <vector>

#include "ddlpv/matrix.hpp"

namespace ddlpv {

/// Affine LPV state-space plant x+ = A(p) x + B(p) u.
struct LpvSs {
  std::vector<Mat> a;
  std::vector<Mat> b;
  Box p_set;

  int nx() const { return static_cast<int>(a.front().rows()); }
  int nu() const { return static_cast<int>(b.front().cols()); }
  int np() const { return static_cast<int>(a.size()) - 1; }
  void validate() const;

  /// Horizontal stack [A0 A1 ... | B0 B1 ...], the [𝒜 ℬ] matrix.
  Mat stacked() const;
};

struct StateFeedbackController {
  std::vector<Mat> k;

  int nu() const { return static_cast<int>(k.front().rows()); }
  int nx() const { return static_cast<int>(k.front().cols()); }
  int np() const { return static_cast<int>(k.size()) - 1; }
  static StateFeedbackController zero(int nu, int nx, int np);
  /// [K1 ... Knp].
  Mat kbar() const;
};

struct PerfWeights {
  Mat q;
  Mat r;

  void validate() const;
  Mat q_half() const;
  Mat r_half() const;
};

/// Evaluation result that also flags scheduling points outside the box.
struct Evaluated {
  Mat value;
  bool outside = false;
};

Evaluated eval_affine(const std::vector<Mat>& terms, const Vec& p,
                      const Box* box = nullptr);
Mat eval_a(const LpvSs& sys, const Vec& p);
Mat eval_b(const LpvSs& sys, const Vec& p);
Mat eval_k(const StateFeedbackController& ctrl, const Vec& p);
Mat closed_loop_a(const LpvSs& sys, const StateFeedbackController& ctrl,
                  const Vec& p);

constexpr double kOverflowGuard = 1e12;

/// Returns x_0 ... x_N as columns.
Mat simulate(const LpvSs& sys, const Vec& x0, const Mat& u_seq,
             const Mat& p_seq);

struct ClosedLoopTrajectory {
  Mat x;  // n_x x (N+1)
  Mat u;  // n_u x N
};

ClosedLoopTrajectory simulate_closed_loop(
    const LpvSs& sys, const StateFeedbackController& ctrl, const Vec& x0,
    const Mat& p_seq, const std::optional<Mat>& w_seq = std::nullopt,
    const std::optional<Vec>& x_ss = std::nullopt,
    const std::optional<Vec>& u_ss = std::nullopt);

Vec perf_output(const PerfWeights& w, const StateFeedbackController& ctrl,
                const Vec& p, const Vec& x);

/// [Q^{1/2}; R^{1/2} K(p)].
Mat perf_c(const PerfWeights& w, const StateFeedbackController& ctrl,
           const Vec& p);

nlohmann::json to_json(const LpvSs& sys);
LpvSs lpv_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StateFeedbackController& ctrl);
StateFeedbackController controller_from_json(const nlohmann::json& j);

nlohmann::json mat_to_json(const Mat& m);
Mat mat_from_json(const nlohmann::json& j);

}  // namespace ddlpv
