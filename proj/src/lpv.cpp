#include "ddlpv/lpv.hpp"

#include <cmath>
#include <string>

namespace ddlpv {

void LpvSs::validate() const {
  if (a.empty() || a.size() != b.size()) {
    throw DimMismatch("LpvSs: A and B lists must be non-empty and equally long");
  }
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].rows() != a[0].rows() || a[i].cols() != a[0].rows()) {
      throw DimMismatch("LpvSs: A_" + std::to_string(i) + " has wrong shape");
    }
    if (b[i].rows() != a[0].rows() || b[i].cols() != b[0].cols()) {
      throw DimMismatch("LpvSs: B_" + std::to_string(i) + " has wrong shape");
    }
  }
  if (p_set.dim() != np()) {
    throw DimMismatch("LpvSs: scheduling box dimension differs from n_p");
  }
}

Mat LpvSs::stacked() const {
  const int n = nx(), m = nu(), q = np();
  Mat out(n, (1 + q) * (n + m));
  for (int i = 0; i <= q; ++i) out.block(0, i * n, n, n) = a[i];
  for (int i = 0; i <= q; ++i) {
    out.block(0, (1 + q) * n + i * m, n, m) = b[i];
  }
  return out;
}

StateFeedbackController StateFeedbackController::zero(int nu, int nx, int np) {
  StateFeedbackController c;
  c.k.assign(np + 1, Mat::Zero(nu, nx));
  return c;
}

Mat StateFeedbackController::kbar() const {
  Mat out(nu(), nx() * np());
  for (int i = 1; i <= np(); ++i) out.block(0, (i - 1) * nx(), nu(), nx()) = k[i];
  return out;
}

void PerfWeights::validate() const {
  if (q.rows() != q.cols() || r.rows() != r.cols()) {
    throw DimMismatch("weights must be square");
  }
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-10 ||
      (r - r.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw WeightNotPsd("weights must be symmetric");
  }
  if (min_eig_sym(q) < -1e-10) throw WeightNotPsd("Q is not positive semidefinite");
  if (min_eig_sym(r) <= 0.0) throw WeightNotPsd("R is not positive definite");
}

Mat PerfWeights::q_half() const { return sqrtm_psd(q); }
Mat PerfWeights::r_half() const { return sqrtm_psd(r); }

Evaluated eval_affine(const std::vector<Mat>& terms, const Vec& p,
                      const Box* box) {
  if (terms.empty() || p.size() + 1 != static_cast<Eigen::Index>(terms.size())) {
    throw DimMismatch("scheduling vector length " + std::to_string(p.size()) +
                      " does not match " + std::to_string(terms.size() - 1) +
                      " scheduling terms");
  }
  Evaluated out;
  out.value = terms[0];
  for (Eigen::Index i = 0; i < p.size(); ++i) out.value += p(i) * terms[i + 1];
  if (box != nullptr) out.outside = !box->contains(p);
  return out;
}

Mat eval_a(const LpvSs& sys, const Vec& p) {
  return eval_affine(sys.a, p, &sys.p_set).value;
}

Mat eval_b(const LpvSs& sys, const Vec& p) {
  return eval_affine(sys.b, p, &sys.p_set).value;
}

Mat eval_k(const StateFeedbackController& ctrl, const Vec& p) {
  return eval_affine(ctrl.k, p).value;
}

Mat closed_loop_a(const LpvSs& sys, const StateFeedbackController& ctrl,
                  const Vec& p) {
  if (ctrl.nx() != sys.nx() || ctrl.nu() != sys.nu() || ctrl.np() != sys.np()) {
    throw DimMismatch("controller dimensions do not match the plant");
  }
  return eval_a(sys, p) + eval_b(sys, p) * eval_k(ctrl, p);
}

namespace {

void guard_state(const Vec& x, int k) {
  if (!x.allFinite() || x.norm() > kOverflowGuard) {
    throw NonFiniteState("state exceeded the overflow guard at step " +
                         std::to_string(k));
  }
}

}  // namespace

Mat simulate(const LpvSs& sys, const Vec& x0, const Mat& u_seq,
             const Mat& p_seq) {
  const int n = sys.nx();
  if (x0.size() != n) throw DimMismatch("x0 has wrong length");
  if (u_seq.cols() != p_seq.cols()) {
    throw DimMismatch("u and p sequences differ in length");
  }
  if (u_seq.rows() != sys.nu() || p_seq.rows() != sys.np()) {
    throw DimMismatch("u or p sample dimension mismatch");
  }
  const Eigen::Index N = u_seq.cols();
  Mat x(n, N + 1);
  x.col(0) = x0;
  for (Eigen::Index k = 0; k < N; ++k) {
    Vec p = p_seq.col(k);
    x.col(k + 1) = eval_a(sys, p) * x.col(k) + eval_b(sys, p) * u_seq.col(k);
    guard_state(x.col(k + 1), static_cast<int>(k + 1));
  }
  return x;
}

ClosedLoopTrajectory simulate_closed_loop(const LpvSs& sys,
                                          const StateFeedbackController& ctrl,
                                          const Vec& x0, const Mat& p_seq,
                                          const std::optional<Mat>& w_seq,
                                          const std::optional<Vec>& x_ss,
                                          const std::optional<Vec>& u_ss) {
  const int n = sys.nx(), m = sys.nu();
  if (x0.size() != n) throw DimMismatch("x0 has wrong length");
  if (p_seq.rows() != sys.np()) throw DimMismatch("p sample dimension mismatch");
  const Eigen::Index N = p_seq.cols();
  if (w_seq && (w_seq->rows() != n || w_seq->cols() != N)) {
    throw DimMismatch("disturbance sequence has wrong shape");
  }
  Vec xs = x_ss.value_or(Vec::Zero(n));
  Vec us = u_ss.value_or(Vec::Zero(m));
  ClosedLoopTrajectory tr;
  tr.x.resize(n, N + 1);
  tr.u.resize(m, N);
  tr.x.col(0) = x0;
  for (Eigen::Index k = 0; k < N; ++k) {
    Vec p = p_seq.col(k);
    Vec xk = tr.x.col(k);
    Vec uk = eval_k(ctrl, p) * (xk - xs) + us;
    tr.u.col(k) = uk;
    Vec xn = eval_a(sys, p) * xk + eval_b(sys, p) * uk;
    if (w_seq) xn += w_seq->col(k);
    guard_state(xn, static_cast<int>(k + 1));
    tr.x.col(k + 1) = xn;
  }
  return tr;
}

Mat perf_c(const PerfWeights& w, const StateFeedbackController& ctrl,
           const Vec& p) {
  Mat qh = w.q_half();
  Mat rh = w.r_half();
  Mat c(qh.rows() + rh.rows(), qh.cols());
  c.topRows(qh.rows()) = qh;
  c.bottomRows(rh.rows()) = rh * eval_k(ctrl, p);
  return c;
}

Vec perf_output(const PerfWeights& w, const StateFeedbackController& ctrl,
                const Vec& p, const Vec& x) {
  if (x.size() != w.q.rows()) throw DimMismatch("state length differs from Q");
  return perf_c(w, ctrl, p) * x;
}

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Mat mat_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error("matrix must be a JSON array of rows");
  if (j.empty()) return Mat(0, 0);
  if (!j[0].is_array()) {
    Mat m(j.size(), 1);
    for (size_t i = 0; i < j.size(); ++i) m(i, 0) = j[i].get<double>();
    return m;
  }
  const size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != cols) throw DimMismatch("ragged matrix rows in JSON");
    for (size_t c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

nlohmann::json to_json(const LpvSs& sys) {
  nlohmann::json j;
  j["n_x"] = sys.nx();
  j["n_u"] = sys.nu();
  j["n_p"] = sys.np();
  j["A"] = nlohmann::json::array();
  j["B"] = nlohmann::json::array();
  for (const auto& a : sys.a) j["A"].push_back(mat_to_json(a));
  for (const auto& b : sys.b) j["B"].push_back(mat_to_json(b));
  j["P_box"] = {{"lower", std::vector<double>(sys.p_set.lower.data(),
                                              sys.p_set.lower.data() +
                                                  sys.p_set.lower.size())},
                {"upper", std::vector<double>(sys.p_set.upper.data(),
                                              sys.p_set.upper.data() +
                                                  sys.p_set.upper.size())}};
  return j;
}

LpvSs lpv_from_json(const nlohmann::json& j) {
  LpvSs sys;
  const int nx = j.at("n_x").get<int>();
  const int nu = j.at("n_u").get<int>();
  const int np = j.at("n_p").get<int>();
  for (const auto& a : j.at("A")) sys.a.push_back(mat_from_json(a));
  for (const auto& b : j.at("B")) sys.b.push_back(mat_from_json(b));
  auto lo = j.at("P_box").at("lower").get<std::vector<double>>();
  auto hi = j.at("P_box").at("upper").get<std::vector<double>>();
  sys.p_set = Box(Eigen::Map<Vec>(lo.data(), lo.size()),
                  Eigen::Map<Vec>(hi.data(), hi.size()));
  sys.validate();
  if (sys.nx() != nx || sys.nu() != nu || sys.np() != np) {
    throw DimMismatch("declared dimensions do not match the matrices");
  }
  return sys;
}

nlohmann::json to_json(const StateFeedbackController& ctrl) {
  nlohmann::json j;
  j["K"] = nlohmann::json::array();
  for (const auto& k : ctrl.k) j["K"].push_back(mat_to_json(k));
  return j;
}

StateFeedbackController controller_from_json(const nlohmann::json& j) {
  StateFeedbackController c;
  for (const auto& k : j.at("K")) c.k.push_back(mat_from_json(k));
  if (c.k.empty()) throw DimMismatch("controller has no gains");
  for (const auto& k : c.k) {
    if (k.rows() != c.k[0].rows() || k.cols() != c.k[0].cols()) {
      throw DimMismatch("controller gains have mixed shapes");
    }
  }
  return c;
}

}  // namespace ddlpv
