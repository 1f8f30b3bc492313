#include "ddlpv/verification.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

namespace ddlpv {

GridSpec::GridSpec(int per_axis, Box box) : points_per_axis(per_axis), pset(std::move(box)) {
  if (per_axis < 2) throw Error("grid needs at least 2 points per axis");
}

GridSpec GridSpec::with_total(const Box& box, int total) {
  const int n = box.dim();
  int per = 2;
  if (n > 0) {
    per = std::max(2, static_cast<int>(std::ceil(std::pow(total, 1.0 / n) - 1e-9)));
  }
  return GridSpec(per, box);
}

int GridSpec::size() const {
  int s = 1;
  for (int i = 0; i < pset.dim(); ++i) s *= points_per_axis;
  return s;
}

std::vector<Vec> GridSpec::points() const {
  const int n = pset.dim();
  std::vector<Vec> out;
  out.reserve(size());
  std::vector<int> idx(n, 0);
  for (int k = 0; k < size(); ++k) {
    Vec p(n);
    for (int i = 0; i < n; ++i) {
      const double t = static_cast<double>(idx[i]) / (points_per_axis - 1);
      p(i) = pset.lower(i) + t * (pset.upper(i) - pset.lower(i));
    }
    out.push_back(p);
    for (int i = n - 1; i >= 0; --i) {
      if (++idx[i] < points_per_axis) break;
      idx[i] = 0;
    }
  }
  return out;
}

SynthesisResult model_analyze_stability(const LpvSs& sys,
                                        const StateFeedbackController& ctrl,
                                        const Box& pset, SolverSettings settings) {
  SynthesisRequest req;
  req.mode = Mode::Analyze;
  req.solver = settings;
  return run_synthesis(ClosedLoopSource::from_model(sys), pset, req, &ctrl);
}

SynthesisResult model_synth(const LpvSs& sys, const Box& pset, SynthesisRequest req) {
  return run_synthesis(ClosedLoopSource::from_model(sys), pset, req);
}

namespace {

void check_dims(const LpvSs& sys, const StateFeedbackController& ctrl) {
  if (ctrl.nx() != sys.nx() || ctrl.nu() != sys.nu() || ctrl.np() != sys.np()) {
    throw DimMismatch("controller dimensions do not match the plant");
  }
}

template <typename F>
GridResult grid_max(const GridSpec& grid, F&& f) {
  GridResult best;
  best.value = -1.0;
  for (const Vec& p : grid.points()) {
    const double v = f(p);
    if (v > best.value) {
      best.value = v;
      best.argmax = p;
    }
  }
  return best;
}

void require_stable(const Mat& a, const Vec& p) {
  if (!(spectral_radius(a) < 1.0)) {
    std::string at;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      at += (i ? ", " : "") + std::to_string(p(i));
    }
    throw UnstableAtGridPoint("frozen closed loop is not Schur stable at p = [" + at + "]");
  }
}

using Cmat = Eigen::MatrixXcd;

double sigma_max_at(const Mat& a, const Mat& c, double theta) {
  const int n = static_cast<int>(a.rows());
  const std::complex<double> z = std::polar(1.0, theta);
  Cmat m = z * Cmat::Identity(n, n) - a.cast<std::complex<double>>();
  Cmat g = c.cast<std::complex<double>>() * m.partialPivLu().solve(Cmat::Identity(n, n));
  return Eigen::JacobiSVD<Cmat>(g).singularValues()(0);
}

/// True when gamma exceeds the H-infinity norm. The discrete system is mapped
/// to continuous time by the bilinear transform and the Hamiltonian is tested
/// for imaginary eigenvalues at which the gain reaches gamma.
bool below_gamma(const Mat& a, const Mat& c, double gamma) {
  const int n = static_cast<int>(a.rows());
  const int nz = static_cast<int>(c.rows());
  const Mat eye = Mat::Identity(n, n);
  const Mat inv = (a + eye).partialPivLu().inverse();
  const double r2 = std::sqrt(2.0);
  const Mat ac = inv * (a - eye);
  const Mat bc = r2 * inv;
  const Mat cc = r2 * c * inv;
  const Mat dc = -c * inv;
  const Mat g2n = gamma * gamma * Mat::Identity(n, n);
  const Mat g2z = gamma * gamma * Mat::Identity(nz, nz);
  const Mat rinv = (dc.transpose() * dc - g2n).inverse();
  const Mat sinv = (dc * dc.transpose() - g2z).inverse();
  const Mat af = ac - bc * rinv * dc.transpose() * cc;
  Mat h(2 * n, 2 * n);
  h << af, -gamma * bc * rinv * bc.transpose(),
       gamma * cc.transpose() * sinv * cc, -af.transpose();
  Eigen::EigenSolver<Mat> es(h, false);
  if (es.info() != Eigen::Success) {
    throw SolverFailure("Hamiltonian eigenvalue iteration did not converge");
  }
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam.real()) > 1e-6 * scale) continue;
    const double theta = 2.0 * std::atan(lam.imag());
    if (sigma_max_at(a, c, theta) >= gamma * (1.0 - 1e-6)) return false;
  }
  return true;
}

}  // namespace

GridResult grid_spectral_radius(const LpvSs& sys, const StateFeedbackController& ctrl,
                                const GridSpec& grid) {
  check_dims(sys, ctrl);
  return grid_max(grid, [&](const Vec& p) { return spectral_radius(closed_loop_a(sys, ctrl, p)); });
}

double frozen_h2_norm(const Mat& a, const Mat& c) {
  const int n = static_cast<int>(a.rows());
  const Mat lhs = Mat::Identity(n * n, n * n) - kron(a, a);
  const Mat eye = Mat::Identity(n, n);
  const Vec v = lhs.partialPivLu().solve(Eigen::Map<const Vec>(eye.data(), n * n));
  const Mat gram = Eigen::Map<const Mat>(v.data(), n, n);
  return std::sqrt(std::max(0.0, (c * gram * c.transpose()).trace()));
}

GridResult grid_h2_norm(const LpvSs& sys, const StateFeedbackController& ctrl,
                        const PerfWeights& w, const GridSpec& grid) {
  check_dims(sys, ctrl);
  return grid_max(grid, [&](const Vec& p) {
    const Mat a = closed_loop_a(sys, ctrl, p);
    require_stable(a, p);
    return frozen_h2_norm(a, perf_c(w, ctrl, p));
  });
}

double frozen_hinf_norm(const Mat& a, const Mat& c, double rel_tol) {
  constexpr int kSweep = 64;
  double lo = 0.0;
  for (int i = 0; i < kSweep; ++i) {
    lo = std::max(lo, sigma_max_at(a, c, std::numbers::pi * i / (kSweep - 1)));
  }
  if (lo == 0.0) return 0.0;
  double hi = lo * (1.0 + rel_tol);
  while (!below_gamma(a, c, hi)) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (below_gamma(a, c, mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

GridResult grid_hinf_norm(const LpvSs& sys, const StateFeedbackController& ctrl,
                          const PerfWeights& w, const GridSpec& grid) {
  check_dims(sys, ctrl);
  return grid_max(grid, [&](const Vec& p) {
    const Mat a = closed_loop_a(sys, ctrl, p);
    require_stable(a, p);
    return frozen_hinf_norm(a, perf_c(w, ctrl, p));
  });
}

double simulated_l2_gain(const LpvSs& sys, const StateFeedbackController& ctrl,
                         const PerfWeights& w, int trials, int horizon,
                         unsigned long long seed) {
  check_dims(sys, ctrl);
  const int nx = sys.nx(), np = sys.np();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Box& box = sys.p_set;
  auto draw_p = [&]() {
    Vec p(np);
    for (int i = 0; i < np; ++i) p(i) = box.lower(i) + unit(rng) * (box.upper(i) - box.lower(i));
    return p;
  };
  double best = 0.0;
  for (int t = 0; t < trials; ++t) {
    const bool frozen = t % 2 == 0;
    Vec p = draw_p();
    Vec x = Vec::Zero(nx);
    double zz = 0.0, ww = 0.0;
    for (int k = 0; k < horizon; ++k) {
      if (!frozen) p = draw_p();
      Vec wk(nx);
      for (int i = 0; i < nx; ++i) wk(i) = gauss(rng);
      zz += (perf_c(w, ctrl, p) * x).squaredNorm();
      ww += wk.squaredNorm();
      x = closed_loop_a(sys, ctrl, p) * x + wk;
      if (!x.allFinite() || x.norm() > kOverflowGuard) {
        throw NonFiniteState("closed-loop state diverged during gain simulation");
      }
    }
    if (ww > 0.0) best = std::max(best, std::sqrt(zz / ww));
  }
  return best;
}

LyapunovCheck lyapunov_decrease_check(const Mat& p_mat, const std::vector<Mat>& trajectories,
                                      double floor) {
  Eigen::LLT<Mat> llt(symmetrize(p_mat));
  if (llt.info() != Eigen::Success) throw Error("Lyapunov check needs P positive definite");
  LyapunovCheck out;
  out.worst_margin = -std::numeric_limits<double>::infinity();
  auto v = [&](const Vec& x) { return x.dot(llt.solve(x)); };
  for (const Mat& tr : trajectories) {
    for (Eigen::Index k = 0; k + 1 < tr.cols(); ++k) {
      const Vec x = tr.col(k);
      if (x.norm() < floor) break;
      const double v0 = v(x);
      const double margin = (v(tr.col(k + 1)) - v0) / v0;
      ++out.steps_checked;
      out.worst_margin = std::max(out.worst_margin, margin);
      if (!(margin < 0.0)) out.pass = false;
    }
  }
  if (out.steps_checked == 0) out.worst_margin = 0.0;
  return out;
}

std::vector<Mat> random_trajectories(const LpvSs& sys, const StateFeedbackController& ctrl,
                                     const Box& pset, int count, int horizon,
                                     unsigned long long seed) {
  check_dims(sys, ctrl);
  const int nx = sys.nx(), np = sys.np();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Mat> out;
  for (int t = 0; t < count; ++t) {
    Vec x0(nx);
    for (int i = 0; i < nx; ++i) x0(i) = gauss(rng);
    x0.normalize();
    Mat ps(np, horizon);
    for (int k = 0; k < horizon; ++k) {
      for (int i = 0; i < np; ++i) {
        ps(i, k) = pset.lower(i) + unit(rng) * (pset.upper(i) - pset.lower(i));
      }
    }
    out.push_back(simulate_closed_loop(sys, ctrl, x0, ps).x);
  }
  return out;
}

VerifyReport verify(const LpvSs& sys, const StateFeedbackController& ctrl,
                    const std::optional<PerfWeights>& w, const std::optional<Mat>& p_mat,
                    const VerifyOptions& opt) {
  VerifyReport r;
  const GridSpec grid = GridSpec::with_total(sys.p_set, opt.grid_total);
  r.grid_rho = grid_spectral_radius(sys, ctrl, grid);
  const bool stable = r.grid_rho.value < 1.0;
  if (w && stable) {
    r.grid_h2 = grid_h2_norm(sys, ctrl, *w, grid);
    r.grid_hinf = grid_hinf_norm(sys, ctrl, *w, grid);
    try {
      r.sim_l2 = simulated_l2_gain(sys, ctrl, *w, opt.l2_trials, opt.l2_horizon, opt.seed);
    } catch (const NonFiniteState&) {
      r.sim_l2.reset();
    }
  }
  if (p_mat && p_mat->size() > 0) {
    try {
      r.lyap = lyapunov_decrease_check(
          *p_mat, random_trajectories(sys, ctrl, sys.p_set, opt.lyap_trajectories,
                                      opt.lyap_horizon, opt.seed));
    } catch (const NonFiniteState&) {
      r.lyap = LyapunovCheck{false, std::numeric_limits<double>::infinity(), 0};
    }
  }
  return r;
}

nlohmann::json to_json(const GridResult& g) {
  nlohmann::json at = nlohmann::json::array();
  for (Eigen::Index i = 0; i < g.argmax.size(); ++i) at.push_back(g.argmax(i));
  return {{"value", g.value}, {"argmax", at}};
}

nlohmann::json to_json(const VerifyReport& v) {
  nlohmann::json j;
  j["grid_rho"] = to_json(v.grid_rho);
  j["grid_h2"] = v.grid_h2 ? to_json(*v.grid_h2) : nlohmann::json(nullptr);
  j["grid_hinf"] = v.grid_hinf ? to_json(*v.grid_hinf) : nlohmann::json(nullptr);
  j["sim_l2"] = v.sim_l2 ? nlohmann::json(*v.sim_l2) : nlohmann::json(nullptr);
  if (v.lyap) {
    j["lyap_pass"] = v.lyap->pass;
    j["lyap_worst_margin"] =
        std::isfinite(v.lyap->worst_margin) ? nlohmann::json(v.lyap->worst_margin)
                                            : nlohmann::json(nullptr);
  } else {
    j["lyap_pass"] = nullptr;
  }
  return j;
}

}  // namespace ddlpv
