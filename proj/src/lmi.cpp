#include "ddlpv/lmi.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ddlpv/sdp.hpp"

namespace ddlpv {

nlohmann::json to_json(const SolverSettings& s) {
  return {{"margin", s.margin},   {"delta", s.delta},
          {"tol_gap", s.tol_gap}, {"tol_feas", s.tol_feas},
          {"max_iter", s.max_iter}};
}

int LmiProblem::declare(const std::string& name, VarKind kind, int rows,
                        int cols, int count) {
  if (index_.count(name)) throw Error("variable declared twice: " + name);
  if (rows < 0 || cols < 0) throw DimMismatch("negative variable shape: " + name);
  const int offset = nscalar_;
  index_[name] = vars_.size();
  vars_.push_back({name, kind, rows, cols, offset, count});
  nscalar_ += count;
  return offset;
}

Expr LmiProblem::sym_var(const std::string& name, int n) {
  const int off = declare(name, VarKind::Symmetric, n, n, n * (n + 1) / 2);
  std::vector<Term> terms;
  int k = off;
  for (int j = 0; j < n; ++j) {
    for (int i = j; i < n; ++i, ++k) {
      terms.push_back({k, i, j, 1.0});
      if (i != j) terms.push_back({k, j, i, 1.0});
    }
  }
  return Expr::from_terms(n, n, std::move(terms));
}

Expr LmiProblem::rect_var(const std::string& name, int rows, int cols) {
  const int off = declare(name, VarKind::Rectangular, rows, cols, rows * cols);
  std::vector<Term> terms;
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) terms.push_back({off + i * cols + j, i, j, 1.0});
  }
  return Expr::from_terms(rows, cols, std::move(terms));
}

Expr LmiProblem::scalar_var(const std::string& name) {
  const int off = declare(name, VarKind::Scalar, 1, 1, 1);
  return Expr::from_terms(1, 1, {{off, 0, 0, 1.0}});
}

const VarInfo& LmiProblem::var(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown variable: " + name);
  return vars_[it->second];
}

bool LmiProblem::has_var(const std::string& name) const {
  return index_.count(name) > 0;
}

Mat LmiProblem::var_value(const VarInfo& v, const Vec& y) const {
  Mat out(v.rows, v.cols);
  switch (v.kind) {
    case VarKind::Symmetric: {
      int k = v.offset;
      for (int j = 0; j < v.cols; ++j) {
        for (int i = j; i < v.rows; ++i, ++k) {
          out(i, j) = y(k);
          out(j, i) = y(k);
        }
      }
      break;
    }
    case VarKind::Rectangular:
    case VarKind::Scalar:
      for (int i = 0; i < v.rows; ++i) {
        for (int j = 0; j < v.cols; ++j) out(i, j) = y(v.offset + i * v.cols + j);
      }
      break;
  }
  return out;
}

void LmiProblem::check_known(const Expr& e, const std::string& where) const {
  if (e.max_var() > nscalar_) {
    throw Error("constraint '" + where + "' references an undeclared variable");
  }
}

namespace {

Expr checked_sym(const Expr& e, const std::string& name) {
  if (e.rows() != e.cols()) {
    throw DimMismatch("LMI '" + name + "' is not square");
  }
  Expr diff = e - e.transpose();
  double asym = diff.constant().cwiseAbs().maxCoeff();
  for (const auto& t : diff.terms()) asym = std::max(asym, std::abs(t.coef));
  double scale = 1.0 + e.constant().cwiseAbs().maxCoeff();
  for (const auto& t : e.terms()) scale = std::max(scale, std::abs(t.coef));
  if (e.rows() > 0 && asym > 1e-9 * scale) {
    throw NotSymmetric("LMI '" + name + "' is not symmetric");
  }
  return e.sym();
}

double expr_scale(const Expr& e) {
  double scale = std::max(1.0, e.constant().norm());
  int cur = -1;
  double sq = 0.0;
  for (const auto& t : e.terms()) {
    if (t.var != cur) {
      scale = std::max(scale, std::sqrt(sq));
      cur = t.var;
      sq = 0.0;
    }
    sq += t.coef * t.coef;
  }
  return std::max(scale, std::sqrt(sq));
}

}  // namespace

void LmiProblem::add_psd(const std::string& name, const Expr& expr, bool strict) {
  check_known(expr, name);
  Expr s = checked_sym(expr, name);
  const double margin = strict ? settings_.margin * expr_scale(s) : 0.0;
  lmis_.push_back({name, std::move(s), margin, strict});
}

void LmiProblem::add_nsd(const std::string& name, const Expr& expr, bool strict) {
  add_psd(name, -expr, strict);
}

void LmiProblem::add_ge(const std::string& name, const Expr& expr, double bound) {
  check_known(expr, name);
  Expr s = checked_sym(expr, name) - bound * Mat::Identity(expr.rows(), expr.cols());
  lmis_.push_back({name, std::move(s), 0.0, false});
}

void LmiProblem::add_le(const std::string& name, const Expr& a, const Expr& b) {
  if (a.rows() != 1 || a.cols() != 1 || b.rows() != 1 || b.cols() != 1) {
    throw DimMismatch("add_le expects scalar expressions");
  }
  add_psd(name, b - a, false);
}

void LmiProblem::add_equality(const std::string& name, const Expr& expr) {
  check_known(expr, name);
  eqs_.push_back({name, expr});
}

void LmiProblem::minimize(const Expr& obj) {
  if (obj.rows() != 1 || obj.cols() != 1) throw DimMismatch("objective must be scalar");
  check_known(obj, "objective");
  objective_ = obj;
  maximize_ = false;
  has_objective_ = true;
}

void LmiProblem::maximize(const Expr& obj) {
  minimize(obj);
  maximize_ = true;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

const Mat& LmiSolution::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw Error("solution has no variable: " + name);
  return it->second;
}

LmiSolution solve(const LmiProblem& problem) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& st = problem.settings();
  sdp::Problem sp;
  sp.m = problem.num_scalars();
  for (const auto& lmi : problem.lmis()) {
    if (lmi.expr.rows() == 0) continue;
    sdp::Block b;
    b.n = lmi.expr.rows();
    b.c = lmi.expr.constant() - lmi.margin * Mat::Identity(b.n, b.n);
    std::map<int, std::vector<sdp::Entry>> by_var;
    for (const auto& t : lmi.expr.terms()) {
      if (t.row >= t.col) by_var[t.var].push_back({t.row, t.col, t.coef});
    }
    for (auto& [v, entries] : by_var) {
      b.vars.push_back(v);
      b.coefs.push_back(std::move(entries));
    }
    sp.blocks.push_back(std::move(b));
  }

  int neq = 0;
  for (const auto& eq : problem.equalities()) neq += eq.expr.rows() * eq.expr.cols();
  sp.e = Mat::Zero(neq, sp.m);
  sp.f = Vec::Zero(neq);
  int r0 = 0;
  for (const auto& eq : problem.equalities()) {
    const int nc = eq.expr.cols();
    for (const auto& t : eq.expr.terms()) sp.e(r0 + t.row * nc + t.col, t.var) += t.coef;
    for (int i = 0; i < eq.expr.rows(); ++i) {
      for (int j = 0; j < nc; ++j) sp.f(r0 + i * nc + j) = -eq.expr.constant()(i, j);
    }
    r0 += eq.expr.rows() * nc;
  }

  sp.cost = Vec::Zero(sp.m);
  const double sign = problem.maximizing() ? -1.0 : 1.0;
  for (const auto& t : problem.objective().terms()) sp.cost(t.var) += sign * t.coef;

  sdp::Options opt;
  opt.tol_gap = st.tol_gap;
  opt.tol_feas = st.tol_feas;
  opt.max_iter = st.max_iter;
  opt.verbose = st.verbose;
  sdp::Result r = sdp::solve(sp, opt);

  LmiSolution sol;
  switch (r.status) {
    case sdp::Status::Optimal: sol.status = SolveStatus::Optimal; break;
    case sdp::Status::Feasible: sol.status = SolveStatus::Feasible; break;
    case sdp::Status::Infeasible: sol.status = SolveStatus::Infeasible; break;
    default: sol.status = SolveStatus::NumericalFailure; break;
  }
  sol.y = r.y.size() == sp.m ? r.y : Vec::Zero(sp.m);
  for (const auto& v : problem.vars()) sol.values[v.name] = problem.var_value(v, sol.y);
  sol.objective = problem.objective().value(sol.y)(0, 0);
  auto& d = sol.diagnostics;
  d.iterations = r.iterations;
  d.primal_infeasibility = r.pinf;
  d.dual_infeasibility = r.dinf;
  d.relative_gap = r.gap;
  d.primal_objective = sign * r.pobj;
  d.dual_objective = sign * r.dobj;
  d.num_vars = sp.m;
  d.num_equalities = neq;
  d.num_blocks = static_cast<int>(sp.blocks.size());
  d.message = r.message;

  if (sol.ok()) {
    for (const auto& row : residual_report(problem, sol)) {
      if (row.violated) {
        sol.status = SolveStatus::NumericalFailure;
        d.message += "; residual check failed on '" + row.name + "'";
        break;
      }
    }
  }
  d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

std::vector<ResidualRow> residual_report(const LmiProblem& problem,
                                         const LmiSolution& solution,
                                         double eq_tol) {
  std::vector<ResidualRow> out;
  const double base = problem.settings().margin;
  for (const auto& lmi : problem.lmis()) {
    ResidualRow row;
    row.name = lmi.name;
    row.kind = "lmi";
    row.size = lmi.expr.rows();
    row.margin = lmi.margin;
    const double lmin = row.size > 0 ? min_eig_sym(symmetrize(lmi.expr.value(solution.y)))
                                     : 0.0;
    row.value = lmin - lmi.margin;
    const double tol = 10.0 * (lmi.strict ? lmi.margin : base);
    row.violated = !std::isfinite(lmin) || lmin < -tol;
    out.push_back(row);
  }
  for (const auto& eq : problem.equalities()) {
    ResidualRow row;
    row.name = eq.name;
    row.kind = "eq";
    row.size = eq.expr.rows() * eq.expr.cols();
    const Mat v = eq.expr.value(solution.y);
    row.value = v.norm();
    const double scale = std::max(1.0, eq.expr.constant().norm());
    row.violated = !std::isfinite(row.value) || row.value > eq_tol * scale;
    out.push_back(row);
  }
  return out;
}

nlohmann::json to_json(const std::vector<ResidualRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    arr.push_back({{"name", r.name},
                   {"kind", r.kind},
                   {"size", r.size},
                   {"value", r.value},
                   {"margin", r.margin},
                   {"violated", r.violated}});
  }
  return arr;
}

nlohmann::json debug_dump(const LmiProblem& problem, const LmiSolution* solution) {
  nlohmann::json j;
  nlohmann::json vars = nlohmann::json::array();
  for (const auto& v : problem.vars()) {
    const char* kind = v.kind == VarKind::Symmetric     ? "symmetric"
                       : v.kind == VarKind::Rectangular ? "rectangular"
                                                        : "scalar";
    vars.push_back({{"name", v.name}, {"kind", kind}, {"rows", v.rows}, {"cols", v.cols}});
  }
  j["variables"] = vars;
  nlohmann::json lmis = nlohmann::json::array();
  for (const auto& l : problem.lmis()) {
    lmis.push_back({{"name", l.name},
                    {"size", l.expr.rows()},
                    {"margin", l.margin},
                    {"strict", l.strict}});
  }
  j["lmis"] = lmis;
  nlohmann::json eqs = nlohmann::json::array();
  for (const auto& e : problem.equalities()) {
    eqs.push_back({{"name", e.name}, {"rows", e.expr.rows()}, {"cols", e.expr.cols()}});
  }
  j["equalities"] = eqs;
  j["objective"] = problem.has_objective()
                       ? (problem.maximizing() ? "maximize" : "minimize")
                       : "feasibility";
  j["settings"] = to_json(problem.settings());
  if (solution) {
    j["status"] = to_string(solution->status);
    j["objective_value"] = solution->objective;
    j["iterations"] = solution->diagnostics.iterations;
    j["residuals"] = to_json(residual_report(problem, *solution));
  }
  return j;
}

Mat LftSpec::delta(const Vec& p) const {
  std::vector<Mat> blocks;
  for (const auto& d : delta_struct) {
    if (d.param < 0 || d.param >= p.size()) {
      throw DimMismatch("scheduling vector too short for the LFT structure");
    }
    blocks.push_back(p(d.param) * Mat::Identity(d.size, d.size));
  }
  return blkdiag(blocks);
}

Mat LftSpec::eval(const Vec& p) const {
  return lft_star(delta(p), l11, l12, l21, l22);
}

std::vector<DeltaBlock> kron_delta(int np, const std::vector<int>& sizes) {
  std::vector<DeltaBlock> out;
  for (int s : sizes) {
    for (int i = 0; i < np; ++i) out.push_back({i, s});
  }
  return out;
}

Multiplier sproc_expand(LmiProblem& problem, const std::string& name,
                        const Expr& w, const LftSpec& lft, const Box& pset) {
  const int nz = lft.nz();
  const int nxi = static_cast<int>(lft.l12.cols());
  if (lft.l11.cols() != nz || lft.l12.rows() != nz || lft.l21.cols() != nz ||
      lft.l22.cols() != nxi || lft.l21.rows() != lft.l22.rows()) {
    throw DimMismatch("LFT blocks have inconsistent shapes");
  }
  if (w.rows() != lft.l21.rows() || w.cols() != w.rows()) {
    throw DimMismatch("W does not match the LFT output dimension");
  }
  int dsize = 0;
  for (const auto& d : lft.delta_struct) dsize += d.size;
  if (dsize != nz) throw DimMismatch("delta structure does not match L11");

  const auto verts = box_vertices(pset);
  for (const auto& v : verts) {
    try {
      lft.eval(v);
    } catch (const SingularLft& e) {
      throw IllPosedLft("LFT '" + name + "' is ill-posed at a vertex: " + e.what());
    }
  }

  Multiplier mult{name, problem.sym_var(name, 2 * nz), nz};
  Mat t = Mat::Zero(2 * nz, nz + nxi);
  t.topLeftCorner(nz, nz) = lft.l11;
  t.topRightCorner(nz, nxi) = lft.l12;
  t.bottomLeftCorner(nz, nz) = Mat::Identity(nz, nz);
  Mat g(lft.l21.rows(), nz + nxi);
  g << lft.l21, lft.l22;
  problem.add_nsd(name + "/outer", congruence(t, mult.xi) - congruence(g, w), true);
  problem.add_ge(name + "/xi22", -mult.xi22(), problem.settings().delta);
  for (size_t k = 0; k < verts.size(); ++k) {
    Mat s(2 * nz, nz);
    s << Mat::Identity(nz, nz), lft.delta(verts[k]);
    problem.add_psd(name + "/vertex" + std::to_string(k), congruence(s, mult.xi), false);
  }
  return mult;
}

}  // namespace ddlpv
