#include "ddlpv/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ddlpv {

std::string to_string(Mode m) {
  switch (m) {
    case Mode::Analyze: return "analyze";
    case Mode::Stabilize: return "stabilize";
    case Mode::Quadratic: return "quadratic";
    case Mode::H2: return "h2";
    case Mode::L2: return "l2";
    case Mode::Noisy: return "noisy";
  }
  return "unknown";
}

Mode mode_from_string(const std::string& s) {
  if (s == "analyze") return Mode::Analyze;
  if (s == "stabilize") return Mode::Stabilize;
  if (s == "quadratic") return Mode::Quadratic;
  if (s == "h2") return Mode::H2;
  if (s == "l2") return Mode::L2;
  if (s == "noisy" || s == "noisy-stabilize") return Mode::Noisy;
  throw Error("unknown mode: " + s);
}

SynthesisRequest apply_robust_restriction(SynthesisRequest r) {
  r.robust = true;
  return r;
}

double eps_from_alpha(double alpha) { return alpha * alpha / (4.0 + 2.0 * alpha); }

ClosedLoopSource ClosedLoopSource::from_data(const DataMatrices& dm) {
  ClosedLoopSource s;
  s.dp = dm.dp;
  s.xplus = dm.xplus;
  s.dims = {dm.nx(), dm.nu(), dm.np()};
  return s;
}

ClosedLoopSource ClosedLoopSource::from_model(const LpvSs& sys) {
  sys.validate();
  ClosedLoopSource s;
  s.model = &sys;
  s.dims = {sys.nx(), sys.nu(), sys.np()};
  return s;
}

namespace {

Expr zero(int r, int c) { return Expr(r, c); }

struct Core {
  Expr p;
  Expr y0;
  Expr ybar;
  Expr cq;    // closed-loop quadratic coefficient, n_x(1+n_p) square
  Expr calf;  // data sources only
  Expr fq;    // data sources only
};

Expr mcl_expr(const Expr& p, const Expr& y0, const Expr& ybar, const Dims& d) {
  const int nx = d.nx, nu = d.nu, np = d.np, npx = nx * np;
  const Mat inp = Mat::Identity(np, np);
  return bmat({{p, zero(nx, npx), zero(nx, npx * np)},
               {zero(npx, nx), kron(inp, p), zero(npx, npx * np)},
               {y0, ybar, zero(nu, npx * np)},
               {zero(nu * np, nx), kron(inp, y0), kron(inp, ybar)}});
}

Core build_core(LmiProblem& prob, const ClosedLoopSource& src, bool robust,
                const StateFeedbackController* fixed) {
  const Dims& d = src.dims;
  const int nx = d.nx, nu = d.nu, np = d.np, npx = nx * np;
  Core c;
  c.p = prob.sym_var("P", nx);
  prob.add_psd("P", c.p);
  if (fixed) {
    if (fixed->nx() != nx || fixed->nu() != nu || fixed->np() != np) {
      throw DimMismatch("controller dimensions do not match the data");
    }
    c.y0 = fixed->k[0] * c.p;
    c.ybar = fixed->kbar() * kron(Mat(Mat::Identity(np, np)), c.p);
  } else {
    c.y0 = prob.rect_var("Y0", nu, nx);
    c.ybar = robust ? zero(nu, npx) : prob.rect_var("Ybar", nu, npx);
  }
  const Expr m = mcl_expr(c.p, c.y0, c.ybar, d);

  if (src.is_model()) {
    const Expr g = src.model->stacked() * m;
    const Expr h = prob.rect_var("H", nx, npx);
    std::vector<Expr> g21, g22;
    for (int i = 0; i < np; ++i) {
      g21.push_back(g.block(0, nx * (1 + i), nx, nx) - h.block(0, nx * i, nx, nx));
      std::vector<Expr> row;
      for (int j = 0; j < np; ++j) {
        row.push_back(g.block(0, nx * (1 + np + i * np + j), nx, nx));
      }
      g22.push_back(hstack(row));
    }
    Expr g21s = np > 0 ? vstack(g21) : zero(0, nx);
    Expr g22s = np > 0 ? vstack(g22) : zero(0, 0);
    c.cq = bmat({{g.block(0, 0, nx, nx), h}, {g21s, g22s}});
    return c;
  }

  const int nm = static_cast<int>(src.dp.cols());
  const Expr f11 = prob.rect_var("F11", nm, nx);
  const Expr f12 = prob.rect_var("F12", nm, npx);
  const Expr f21 = prob.rect_var("F21", nm * np, nx);
  const Expr f22 = (robust && !fixed) ? zero(nm * np, npx)
                                      : prob.rect_var("F22", nm * np, npx);
  c.fq = bmat({{f11, f12}, {f21, f22}});
  std::vector<Expr> cols{f11};
  for (int i = 0; i < np; ++i) {
    cols.push_back(f12.block(0, i * nx, nm, nx) + f21.block(i * nm, 0, nm, nx));
  }
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < np; ++j) cols.push_back(f22.block(i * nm, j * nx, nm, nx));
  }
  c.calf = hstack(cols);
  prob.add_equality("data coupling", src.dp * c.calf - m);
  c.cq = kron(Mat(Mat::Identity(1 + np, 1 + np)), src.xplus) * c.fq;
  return c;
}

/// LFT for quadratic forms in [I; p⊗I] acting on two state copies, plus an
/// unscheduled channel of size extra.
LftSpec standard_lft(int nx, int np, int extra) {
  const int nz = 2 * nx * np;
  const int n2 = nx * (1 + np);
  LftSpec l;
  l.l11 = Mat::Zero(nz, nz);
  l.l12 = Mat::Zero(nz, 2 * nx + extra);
  l.l12.leftCols(2 * nx) = kron(Mat::Ones(np, 1), Mat::Identity(2 * nx, 2 * nx));
  Mat i0 = Mat::Zero(nx, 2 * nx), o = Mat::Zero(nx, 2 * nx);
  i0.leftCols(nx).setIdentity();
  o.rightCols(nx).setIdentity();
  l.l21 = Mat::Zero(2 * n2 + extra, nz);
  l.l21.block(nx, 0, nx * np, nz) = kron(Mat::Identity(np, np), i0);
  l.l21.block(n2 + nx, 0, nx * np, nz) = kron(Mat::Identity(np, np), o);
  l.l22 = Mat::Zero(2 * n2 + extra, 2 * nx + extra);
  l.l22.block(0, 0, nx, 2 * nx) = i0;
  l.l22.block(n2, 0, nx, 2 * nx) = o;
  if (extra > 0) l.l22.bottomRightCorner(extra, extra).setIdentity();
  l.delta_struct = kron_delta(np, {2 * nx});
  return l;
}

Mat safe_inverse(const Mat& p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(p));
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConditionP) {
    throw IllConditionedP("P is ill-conditioned (min eig " + std::to_string(lo) +
                          ", max eig " + std::to_string(hi) +
                          "); consider a trace box on P");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

void require_weights(const SynthesisRequest& req) {
  if (!req.weights) throw Error(to_string(req.mode) + " mode requires weights");
  req.weights->validate();
}

void fill_common(SynthesisResult& res, const LmiProblem& prob, const LmiSolution& sol) {
  res.status = sol.status;
  res.diagnostics = sol.diagnostics;
  res.objective = sol.objective;
  res.settings = prob.settings();
  res.message = sol.diagnostics.message;
  res.cert.residuals = residual_report(prob, sol);
}

StateFeedbackController extract_controller(const Mat& p, const Mat& y0,
                                           const Mat& ybar, const Dims& d) {
  const Mat pinv = safe_inverse(p);
  StateFeedbackController ctrl;
  ctrl.k.push_back(y0 * pinv);
  for (int i = 0; i < d.np; ++i) ctrl.k.push_back(ybar.middleCols(i * d.nx, d.nx) * pinv);
  return ctrl;
}

}  // namespace

SynthesisResult run_synthesis(const ClosedLoopSource& src, const Box& pset,
                              const SynthesisRequest& req,
                              const StateFeedbackController* fixed) {
  if (req.mode == Mode::Noisy) {
    throw Error("noisy mode needs noisy data matrices");
  }
  if (req.mode == Mode::Analyze && !fixed) {
    throw Error("analyze mode needs a controller");
  }
  const Dims& d = src.dims;
  if (pset.dim() != d.np) throw DimMismatch("scheduling box dimension differs from n_p");
  if (!src.is_model()) {
    const int required = (1 + d.np) * (d.nx + d.nu);
    const int rank = numerical_rank(src.dp);
    if (rank < required) {
      throw RankDeficient("data matrix is not persistently exciting", rank, required);
    }
  }
  const int nx = d.nx, nu = d.nu, np = d.np, npx = nx * np, n2 = nx * (1 + np);

  LmiProblem prob(req.solver);
  Core c = build_core(prob, src, req.robust, fixed);
  const Expr p0 = blkdiag({c.p, zero(npx, npx)});
  const Expr yc = hstack({c.y0, c.ybar});
  const Expr cqt = c.cq.transpose();

  Expr w;
  int extra = 0;
  std::optional<Expr> s_var, g_var, gam_var;
  switch (req.mode) {
    case Mode::Analyze:
    case Mode::Stabilize:
      w = bmat({{p0, cqt}, {c.cq, p0}});
      break;
    case Mode::Quadratic: {
      require_weights(req);
      const Mat qh = req.weights->q_half(), rh = req.weights->r_half();
      const Expr qp = hstack({qh * c.p, zero(nx, npx)});
      const Expr ry = rh * yc;
      w = bmat({{p0, cqt, qp.transpose(), ry.transpose()},
                {c.cq, p0, zero(n2, nx), zero(n2, nu)},
                {qp, zero(nx, n2), Expr(Mat(Mat::Identity(nx, nx))), zero(nx, nu)},
                {ry, zero(nu, n2), zero(nu, nx), Expr(Mat(Mat::Identity(nu, nu)))}});
      extra = nx + nu;
      if (req.maximize_trace) {
        prob.maximize(trace(c.p));
      } else {
        prob.minimize(trace(c.p));
      }
      break;
    }
    case Mode::H2: {
      require_weights(req);
      const Mat rh = req.weights->r_half();
      Mat i0 = Mat::Zero(n2, n2);
      i0.topLeftCorner(nx, nx).setIdentity();
      w = bmat({{p0 - i0, cqt}, {c.cq, p0}});
      s_var = prob.sym_var("S", nu);
      g_var = prob.scalar_var("g");
      const auto verts = box_vertices(pset);
      for (size_t k = 0; k < verts.size(); ++k) {
        const Expr ry = rh * (yc * affine_basis(verts[k], nx));
        prob.add_psd("S vertex" + std::to_string(k),
                     bmat({{*s_var, ry}, {ry.transpose(), c.p}}));
      }
      prob.add_psd("P - I", c.p - Mat(Mat::Identity(nx, nx)));
      prob.add_le("h2 bound", trace(req.weights->q * c.p) + trace(*s_var), *g_var);
      if (req.gamma) {
        prob.add_equality("gamma fixed", *g_var - Mat::Constant(1, 1, *req.gamma * *req.gamma));
      } else if (!fixed) {
        prob.minimize(*g_var);
      }
      break;
    }
    case Mode::L2: {
      require_weights(req);
      const Mat qh = req.weights->q_half(), rh = req.weights->r_half();
      gam_var = prob.scalar_var("gamma");
      const Expr qp = hstack({qh * c.p, zero(nx, npx)});
      const Expr ry = rh * yc;
      Mat i0r = Mat::Zero(nx, n2);
      i0r.leftCols(nx).setIdentity();
      const Expr gx = kron(Mat(Mat::Identity(nx, nx)), *gam_var);
      const Expr gu = kron(Mat(Mat::Identity(nu, nu)), *gam_var);
      w = bmat({{p0, cqt, qp.transpose(), ry.transpose(), zero(n2, nx)},
                {c.cq, p0, zero(n2, nx), zero(n2, nu), Expr(Mat(i0r.transpose()))},
                {qp, zero(nx, n2), gx, zero(nx, nu), zero(nx, nx)},
                {ry, zero(nu, n2), zero(nu, nx), gu, zero(nu, nx)},
                {zero(nx, n2), Expr(i0r), zero(nx, nx), zero(nx, nu), gx}});
      extra = 2 * nx + nu;
      if (req.gamma) {
        prob.add_equality("gamma fixed", *gam_var - Mat::Constant(1, 1, *req.gamma));
      } else if (!fixed) {
        prob.minimize(*gam_var + req.reg_lambda * trace(c.p));
      }
      break;
    }
    case Mode::Noisy:
      break;
  }
  if (req.trace_box) {
    if (std::isfinite(req.trace_box->lo)) {
      prob.add_le("trace lower", Expr::scalar(req.trace_box->lo), trace(c.p));
    }
    if (std::isfinite(req.trace_box->hi)) {
      prob.add_le("trace upper", trace(c.p), Expr::scalar(req.trace_box->hi));
    }
  }
  const Multiplier xi = sproc_expand(prob, "Xi", w, standard_lft(nx, np, extra), pset);

  const LmiSolution sol = solve(prob);
  SynthesisResult res;
  res.mode = req.mode;
  fill_common(res, prob, sol);
  if (!sol.ok()) return res;

  auto& cert = res.cert;
  cert.p_mat = sol.at("P");
  cert.y0 = c.y0.value(sol.y);
  cert.ybar = c.ybar.value(sol.y);
  cert.multipliers.push_back(sol.at("Xi"));
  if (!src.is_model()) {
    cert.fq = FqMatrix::from_assembled(c.fq.value(sol.y), static_cast<int>(src.dp.cols()),
                                       nx, np);
  }
  if (s_var) {
    cert.s_mat = sol.at("S");
    cert.gamma = std::sqrt(std::max(0.0, sol.scalar("g")));
  }
  if (gam_var) cert.gamma = sol.scalar("gamma");
  res.ctrl = fixed ? *fixed : extract_controller(cert.p_mat, cert.y0, cert.ybar, d);
  (void)xi;

  if (!fixed && req.self_check) {
    SynthesisRequest check;
    check.mode = Mode::Analyze;
    check.solver = req.solver;
    const SynthesisResult a = run_synthesis(src, pset, check, &res.ctrl);
    res.self_check = a.ok();
    if (!a.ok()) {
      res.status = SolveStatus::NumericalFailure;
      res.message += "; self-check analysis failed (" + to_string(a.status) + ")";
    }
  }
  return res;
}

SynthesisResult analyze_stability(const DataMatrices& dm,
                                  const StateFeedbackController& ctrl,
                                  const Box& pset, SolverSettings settings) {
  SynthesisRequest req;
  req.mode = Mode::Analyze;
  req.solver = settings;
  return run_synthesis(ClosedLoopSource::from_data(dm), pset, req, &ctrl);
}

SynthesisResult synth_stabilizing(const DataMatrices& dm, const Box& pset,
                                  SynthesisRequest req) {
  req.mode = Mode::Stabilize;
  return run_synthesis(ClosedLoopSource::from_data(dm), pset, req);
}

SynthesisResult synth_quadratic(const DataMatrices& dm, const Box& pset,
                                SynthesisRequest req) {
  req.mode = Mode::Quadratic;
  return run_synthesis(ClosedLoopSource::from_data(dm), pset, req);
}

SynthesisResult synth_h2(const DataMatrices& dm, const Box& pset, SynthesisRequest req) {
  req.mode = Mode::H2;
  return run_synthesis(ClosedLoopSource::from_data(dm), pset, req);
}

SynthesisResult synth_l2(const DataMatrices& dm, const Box& pset, SynthesisRequest req) {
  req.mode = Mode::L2;
  return run_synthesis(ClosedLoopSource::from_data(dm), pset, req);
}

namespace {

SynthesisResult run_noisy(const NoisyMatrices& nm, const Box& pset,
                          const SynthesisRequest& req,
                          const StateFeedbackController* fixed) {
  const DataMatrices& dm = nm.data;
  const Dims d{dm.nx(), dm.nu(), dm.np()};
  const int nx = d.nx, np = d.np, npx = nx * np;
  const int ncols = dm.cols();
  if (pset.dim() != np) throw DimMismatch("scheduling box dimension differs from n_p");
  const int required = (1 + np) * (nx + d.nu);
  const int rank = numerical_rank(dm.dp);
  if (rank < required) {
    throw AssumptionViolated("noisy data stack has rank " + std::to_string(rank) +
                             ", required " + std::to_string(required));
  }
  if (numerical_rank(dm.xplus) < nx) {
    throw AssumptionViolated("shifted noisy states do not have full row rank");
  }

  ClosedLoopSource src = ClosedLoopSource::from_data(dm);
  LmiProblem prob(req.solver);
  Core c = build_core(prob, src, req.robust, fixed);
  const Expr alpha = prob.scalar_var("alpha");
  prob.add_ge("alpha", alpha, 0.0);

  const Mat zz = dm.xplus * dm.xplus.transpose();
  const Expr tl = blkdiag({c.p - kron(zz, alpha), zero(npx, npx)});
  const Expr p0 = blkdiag({c.p, zero(npx, npx)});
  const Expr w1 = bmat({{tl, c.cq}, {c.cq.transpose(), p0}});
  sproc_expand(prob, "Xi1", w1, standard_lft(nx, np, 0), pset);

  const int nv = nx * (1 + np + np * np);
  const Expr p00 = blkdiag({c.p, zero(nv - nx, nv - nx)});
  const Expr w2 = bmat({{Expr(Mat(Mat::Identity(ncols, ncols))), c.calf},
                        {c.calf.transpose(), p00}});
  const int nz = npx + np * npx;
  LftSpec l2;
  l2.l11 = Mat::Zero(nz, nz);
  l2.l11.block(npx, 0, np * npx, npx) = kron(Mat::Ones(np, 1), Mat::Identity(npx, npx));
  l2.l12 = Mat::Zero(nz, ncols + nx);
  l2.l12.block(0, ncols, npx, nx) = kron(Mat::Ones(np, 1), Mat::Identity(nx, nx));
  l2.l21 = Mat::Zero(ncols + nv, nz);
  l2.l21.bottomRows(nz).setIdentity();
  l2.l22 = Mat::Zero(ncols + nv, ncols + nx);
  l2.l22.topLeftCorner(ncols, ncols).setIdentity();
  l2.l22.block(ncols, ncols, nx, nx).setIdentity();
  l2.delta_struct = kron_delta(np, {nx, npx});
  sproc_expand(prob, "Xi2", w2, l2, pset);

  if (req.trace_box) {
    if (std::isfinite(req.trace_box->lo)) {
      prob.add_le("trace lower", Expr::scalar(req.trace_box->lo), trace(c.p));
    }
    if (std::isfinite(req.trace_box->hi)) {
      prob.add_le("trace upper", trace(c.p), Expr::scalar(req.trace_box->hi));
    }
  }
  if (!fixed) prob.maximize(alpha);

  const LmiSolution sol = solve(prob);
  SynthesisResult res;
  res.mode = Mode::Noisy;
  fill_common(res, prob, sol);
  if (!sol.ok()) return res;
  auto& cert = res.cert;
  cert.p_mat = sol.at("P");
  cert.y0 = c.y0.value(sol.y);
  cert.ybar = c.ybar.value(sol.y);
  cert.fq = FqMatrix::from_assembled(c.fq.value(sol.y), ncols, nx, np);
  cert.multipliers = {sol.at("Xi1"), sol.at("Xi2")};
  cert.alpha = std::max(0.0, sol.scalar("alpha"));
  cert.eps_opt = eps_from_alpha(*cert.alpha);
  if (req.eps_claim) res.guaranteed = *cert.eps_opt > *req.eps_claim;
  res.ctrl = fixed ? *fixed : extract_controller(cert.p_mat, cert.y0, cert.ybar, d);

  if (!fixed && req.self_check) {
    SynthesisRequest check;
    check.solver = req.solver;
    const SynthesisResult a = run_noisy(nm, pset, check, &res.ctrl);
    res.self_check = a.ok();
    if (!a.ok()) {
      res.status = SolveStatus::NumericalFailure;
      res.message += "; self-check analysis failed (" + to_string(a.status) + ")";
    }
  }
  return res;
}

}  // namespace

SynthesisResult synth_noisy_stabilizing(const NoisyMatrices& nm, const Box& pset,
                                        SynthesisRequest req) {
  req.mode = Mode::Noisy;
  return run_noisy(nm, pset, req, nullptr);
}

SynthesisResult analyze_noisy(const NoisyMatrices& nm,
                              const StateFeedbackController& ctrl,
                              const Box& pset, SolverSettings settings) {
  SynthesisRequest req;
  req.mode = Mode::Noisy;
  req.solver = settings;
  return run_noisy(nm, pset, req, &ctrl);
}

nlohmann::json to_json(const SynthesisResult& r) {
  nlohmann::json j;
  j["mode"] = to_string(r.mode);
  j["status"] = to_string(r.status);
  j["gamma"] = r.cert.gamma ? nlohmann::json(*r.cert.gamma) : nlohmann::json(nullptr);
  j["alpha"] = r.cert.alpha ? nlohmann::json(*r.cert.alpha) : nlohmann::json(nullptr);
  j["eps_opt"] = r.cert.eps_opt ? nlohmann::json(*r.cert.eps_opt) : nlohmann::json(nullptr);
  nlohmann::json ks = nlohmann::json::array();
  for (const auto& k : r.ctrl.k) ks.push_back(mat_to_json(k));
  j["K"] = ks;
  j["P"] = r.cert.p_mat.size() > 0 ? mat_to_json(r.cert.p_mat) : nlohmann::json::array();
  if (r.cert.s_mat) j["S"] = mat_to_json(*r.cert.s_mat);
  j["objective"] = r.objective;
  j["residuals"] = to_json(r.cert.residuals);
  j["self_check"] = r.self_check ? nlohmann::json(*r.self_check) : nlohmann::json(nullptr);
  if (r.guaranteed) j["guaranteed"] = *r.guaranteed;
  nlohmann::json solver = to_json(r.settings);
  solver["iterations"] = r.diagnostics.iterations;
  solver["primal_infeasibility"] = r.diagnostics.primal_infeasibility;
  solver["dual_infeasibility"] = r.diagnostics.dual_infeasibility;
  solver["relative_gap"] = r.diagnostics.relative_gap;
  solver["num_vars"] = r.diagnostics.num_vars;
  solver["num_blocks"] = r.diagnostics.num_blocks;
  solver["message"] = r.message;
  j["solver"] = solver;
  return j;
}

}  // namespace ddlpv
