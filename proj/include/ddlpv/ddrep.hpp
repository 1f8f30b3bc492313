#pragma once

#include "ddlpv/data.hpp"

namespace ddlpv {

struct Dims {
  int nx = 0;
  int nu = 0;
  int np = 0;
};

struct OpenLoopRep {
  Mat xplus;
  Mat dp_pinv;
  Dims dims;
  int nd = 0;

  /// x+ = X+ Dp^† [x; p⊗x; u; p⊗u].
  Vec predict(const Vec& x, const Vec& p, const Vec& u) const;
};

OpenLoopRep open_loop_rep(const DataMatrices& dm, double tol = 1e-8);

/// Block structure [I 0 0; 0 I 0; K0 K̄ 0; 0 I⊗K0 I⊗K̄].
Mat mcl_matrix(const StateFeedbackController& ctrl, const Dims& dims);

/// Minimum-norm 𝒱 with Dp 𝒱 = M_CL.
Mat solve_v(const DataMatrices& dm, const StateFeedbackController& ctrl,
            double tol = 1e-8);

StateFeedbackController recover_controller(const Mat& u_mat, const Mat& v,
                                           const Dims& dims);

/// [I; p⊗I; p⊗p⊗I] with identity blocks of size n.
Mat poly_basis(const Vec& p, int n);

/// [I; p⊗I] with identity blocks of size n.
Mat affine_basis(const Vec& p, int n);

/// Closed-loop data-driven matrix X+ 𝒱 [I; p⊗I; p⊗p⊗I].
Mat closed_loop_from_data(const Mat& xplus, const Mat& v, const Vec& p);

struct FqMatrix {
  Mat f11;
  Mat f12;
  Mat f21;
  Mat f22;

  int rows() const { return static_cast<int>(f11.rows()); }
  int nx() const { return static_cast<int>(f11.cols()); }
  int np() const {
    return f11.cols() == 0 ? 0 : static_cast<int>(f12.cols() / f11.cols());
  }
  Mat assembled() const;
  static FqMatrix from_assembled(const Mat& fq, int rows, int nx, int np);
};

Mat fq_eval(const FqMatrix& fq, const Vec& p);
Mat fq_to_calf(const FqMatrix& fq);

}  // namespace ddlpv
