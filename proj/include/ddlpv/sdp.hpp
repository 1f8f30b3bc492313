#pragma once

#include <string>
#include <vector>

#include "ddlpv/matrix.hpp"

namespace ddlpv::sdp {

/// Lower-triangular coefficient entry (row >= col) of a symmetric matrix.
struct Entry {
  int r;
  int c;
  double v;
};

struct Block {
  int n = 0;
  Mat c;                                  // constant term
  std::vector<int> vars;                  // global variable indices
  std::vector<std::vector<Entry>> coefs;  // one sparse matrix per local var
};

/// minimize cost^T y  s.t.  C_j + sum_k y_k A_jk >= 0 for all blocks,
///                          E y = f.
struct Problem {
  int m = 0;
  std::vector<Block> blocks;
  Vec cost;
  Mat e;
  Vec f;
};

struct Options {
  double tol_gap = 1e-8;
  double tol_feas = 1e-8;
  double tol_infeas = 1e-8;
  int max_iter = 120;
  bool verbose = false;
};

enum class Status { Optimal, Feasible, Infeasible, Unbounded, Failure };

struct Result {
  Status status = Status::Failure;
  Vec y;
  std::vector<Mat> x;
  Vec lambda;
  int iterations = 0;
  double pinf = 0.0;
  double dinf = 0.0;
  double gap = 0.0;
  double pobj = 0.0;
  double dobj = 0.0;
  std::string message;
};

Result solve(const Problem& problem, const Options& options);

}  // namespace ddlpv::sdp
