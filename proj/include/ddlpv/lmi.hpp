#pragma once

#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "ddlpv/expr.hpp"

namespace ddlpv {

enum class VarKind { Symmetric, Rectangular, Scalar };

struct VarInfo {
  std::string name;
  VarKind kind;
  int rows;
  int cols;
  int offset;
  int count;
};

struct LmiConstraint {
  std::string name;
  Expr expr;      // required: expr - margin * I >= 0
  double margin;  // absolute
  bool strict;
};

struct EqConstraint {
  std::string name;
  Expr expr;  // required: expr == 0
};

struct SolverSettings {
  double margin = 1e-7;
  double delta = 1e-7;
  double tol_gap = 1e-8;
  double tol_feas = 1e-8;
  int max_iter = 120;
  bool verbose = false;
};

nlohmann::json to_json(const SolverSettings& s);

/// Declarative SDP: variables, affine equalities, LMIs and a linear objective.
class LmiProblem {
 public:
  explicit LmiProblem(SolverSettings settings = {}) : settings_(settings) {}

  Expr sym_var(const std::string& name, int n);
  Expr rect_var(const std::string& name, int rows, int cols);
  Expr scalar_var(const std::string& name);

  /// expr > 0 (strict, margin scaled by the expression norm) or expr >= 0.
  void add_psd(const std::string& name, const Expr& expr, bool strict = true);
  /// expr < 0 or expr <= 0.
  void add_nsd(const std::string& name, const Expr& expr, bool strict = true);
  /// expr >= bound * I with an absolute bound.
  void add_ge(const std::string& name, const Expr& expr, double bound);
  /// Scalar expression a <= b.
  void add_le(const std::string& name, const Expr& a, const Expr& b);
  void add_equality(const std::string& name, const Expr& expr);

  void minimize(const Expr& obj);
  void maximize(const Expr& obj);

  const std::vector<VarInfo>& vars() const { return vars_; }
  const std::vector<LmiConstraint>& lmis() const { return lmis_; }
  const std::vector<EqConstraint>& equalities() const { return eqs_; }
  const Expr& objective() const { return objective_; }
  bool maximizing() const { return maximize_; }
  bool has_objective() const { return has_objective_; }
  int num_scalars() const { return nscalar_; }
  const SolverSettings& settings() const { return settings_; }
  SolverSettings& settings() { return settings_; }
  const VarInfo& var(const std::string& name) const;
  bool has_var(const std::string& name) const;

  /// Rebuilds the matrix value of a variable from the scalar vector.
  Mat var_value(const VarInfo& v, const Vec& y) const;

 private:
  void check_known(const Expr& e, const std::string& where) const;
  int declare(const std::string& name, VarKind kind, int rows, int cols,
              int count);

  SolverSettings settings_;
  std::vector<VarInfo> vars_;
  std::map<std::string, size_t> index_;
  int nscalar_ = 0;
  std::vector<LmiConstraint> lmis_;
  std::vector<EqConstraint> eqs_;
  Expr objective_ = Expr::scalar(0.0);
  bool maximize_ = false;
  bool has_objective_ = false;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, NumericalFailure };

std::string to_string(SolveStatus s);

struct SolverDiagnostics {
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double seconds = 0.0;
  int num_vars = 0;
  int num_equalities = 0;
  int num_blocks = 0;
  std::string message;
};

struct LmiSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec y;
  std::map<std::string, Mat> values;
  double objective = 0.0;
  SolverDiagnostics diagnostics;

  bool ok() const {
    return status == SolveStatus::Optimal || status == SolveStatus::Feasible;
  }
  const Mat& at(const std::string& name) const;
  double scalar(const std::string& name) const { return at(name)(0, 0); }
};

LmiSolution solve(const LmiProblem& problem);

struct ResidualRow {
  std::string name;
  std::string kind;  // "lmi" or "eq"
  int size = 0;
  double value = 0.0;  // min eigenvalue minus margin, or Frobenius residual
  double margin = 0.0;
  bool violated = false;
};

/// Min eigenvalue of each LMI (relative to its margin) and Frobenius residual
/// of each equality. A row is flagged when an LMI falls below -10*margin
/// or an equality residual exceeds eq_tol.
std::vector<ResidualRow> residual_report(const LmiProblem& problem,
                                         const LmiSolution& solution,
                                         double eq_tol = 1e-6);

nlohmann::json to_json(const std::vector<ResidualRow>& rows);
nlohmann::json debug_dump(const LmiProblem& problem, const LmiSolution* solution);

/// Upper LFT description L(p) = Δ(p) ⋆ [L11 L12; L21 L22].
struct DeltaBlock {
  int param;
  int size;
};

struct LftSpec {
  Mat l11;
  Mat l12;
  Mat l21;
  Mat l22;
  std::vector<DeltaBlock> delta_struct;

  Mat delta(const Vec& p) const;
  Mat eval(const Vec& p) const;
  int nz() const { return static_cast<int>(l11.rows()); }
};

/// Δ(p) = diag(p) ⊗ I_n repeated for each listed block size, blocks ordered as
/// sizes, with every size block holding n_p repetitions.
std::vector<DeltaBlock> kron_delta(int np, const std::vector<int>& sizes);

struct Multiplier {
  std::string name;
  Expr xi;
  int nz;
  Expr xi11() const { return xi.block(0, 0, nz, nz); }
  Expr xi12() const { return xi.block(0, nz, nz, nz); }
  Expr xi22() const { return xi.block(nz, nz, nz, nz); }
};

/// Adds the full-block S-procedure conditions for L(p)^T W L(p) > 0 on the
/// box: one scheduling-independent LMI, one LMI per vertex and Ξ22 <= -δI.
Multiplier sproc_expand(LmiProblem& problem, const std::string& name,
                        const Expr& w, const LftSpec& lft, const Box& pset);

}  // namespace ddlpv
