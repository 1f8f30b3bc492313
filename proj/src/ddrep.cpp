#include "ddlpv/ddrep.hpp"

namespace ddlpv {

Vec OpenLoopRep::predict(const Vec& x, const Vec& p, const Vec& u) const {
  if (x.size() != dims.nx || p.size() != dims.np || u.size() != dims.nu) {
    throw DimMismatch("predict: sample dimensions do not match the data");
  }
  Vec reg((1 + dims.np) * (dims.nx + dims.nu));
  reg << x, kron(p, x), u, kron(p, u);
  return xplus * (dp_pinv * reg);
}

OpenLoopRep open_loop_rep(const DataMatrices& dm, double tol) {
  OpenLoopRep rep;
  rep.xplus = dm.xplus;
  rep.dp_pinv = pinv_right(dm.dp, tol);
  rep.dims = {dm.nx(), dm.nu(), dm.np()};
  rep.nd = dm.cols() + 1;
  return rep;
}

Mat mcl_matrix(const StateFeedbackController& ctrl, const Dims& d) {
  if (ctrl.nx() != d.nx || ctrl.nu() != d.nu || ctrl.np() != d.np) {
    throw DimMismatch("mcl_matrix: controller does not match dimensions");
  }
  const int nx = d.nx, nu = d.nu, np = d.np;
  Mat m = Mat::Zero((1 + np) * (nx + nu), nx * (1 + np + np * np));
  m.block(0, 0, nx, nx).setIdentity();
  m.block(nx, nx, np * nx, np * nx).setIdentity();
  const int r3 = nx * (1 + np);
  m.block(r3, 0, nu, nx) = ctrl.k[0];
  m.block(r3, nx, nu, nx * np) = ctrl.kbar();
  const int r4 = r3 + nu;
  Mat ip = Mat::Identity(np, np);
  m.block(r4, nx, np * nu, np * nx) = kron(ip, ctrl.k[0]);
  m.block(r4, nx * (1 + np), np * nu, np * np * nx) = kron(ip, ctrl.kbar());
  return m;
}

Mat solve_v(const DataMatrices& dm, const StateFeedbackController& ctrl,
            double tol) {
  Mat m = mcl_matrix(ctrl, {dm.nx(), dm.nu(), dm.np()});
  return pinv_right(dm.dp, tol) * m;
}

StateFeedbackController recover_controller(const Mat& u_mat, const Mat& v,
                                           const Dims& d) {
  if (v.cols() != d.nx * (1 + d.np + d.np * d.np) || v.rows() != u_mat.cols() ||
      u_mat.rows() != d.nu) {
    throw DimMismatch("recover_controller: 𝒱 and U have incompatible shapes");
  }
  StateFeedbackController c;
  c.k.push_back(u_mat * v.leftCols(d.nx));
  Mat kbar = u_mat * v.middleCols(d.nx, d.nx * d.np);
  for (int i = 0; i < d.np; ++i) c.k.push_back(kbar.middleCols(i * d.nx, d.nx));
  return c;
}

Mat affine_basis(const Vec& p, int n) {
  Mat out((1 + p.size()) * n, n);
  Mat id = Mat::Identity(n, n);
  out.topRows(n) = id;
  out.bottomRows(p.size() * n) = kron(p, id);
  return out;
}

Mat poly_basis(const Vec& p, int n) {
  const Eigen::Index q = p.size();
  Mat out((1 + q + q * q) * n, n);
  Mat id = Mat::Identity(n, n);
  out.topRows(n) = id;
  out.middleRows(n, q * n) = kron(p, id);
  out.bottomRows(q * q * n) = kron(kron(p, p), id);
  return out;
}

Mat closed_loop_from_data(const Mat& xplus, const Mat& v, const Vec& p) {
  const int nx = static_cast<int>(xplus.rows());
  return xplus * v * poly_basis(p, nx);
}

Mat FqMatrix::assembled() const {
  Mat out(f11.rows() + f21.rows(), f11.cols() + f12.cols());
  out << f11, f12, f21, f22;
  return out;
}

FqMatrix FqMatrix::from_assembled(const Mat& fq, int rows, int nx, int np) {
  if (fq.rows() != rows * (1 + np) || fq.cols() != nx * (1 + np)) {
    throw DimMismatch("F_Q has the wrong shape");
  }
  FqMatrix f;
  f.f11 = fq.topLeftCorner(rows, nx);
  f.f12 = fq.topRightCorner(rows, nx * np);
  f.f21 = fq.bottomLeftCorner(rows * np, nx);
  f.f22 = fq.bottomRightCorner(rows * np, nx * np);
  return f;
}

Mat fq_eval(const FqMatrix& fq, const Vec& p) {
  const int n = fq.rows(), nx = fq.nx(), np = fq.np();
  if (p.size() != np) throw DimMismatch("fq_eval: scheduling length mismatch");
  Mat out = fq.f11;
  for (int i = 0; i < np; ++i) {
    out += p(i) * fq.f12.middleCols(i * nx, nx);
    out += p(i) * fq.f21.middleRows(i * n, n);
    for (int j = 0; j < np; ++j) {
      out += p(i) * p(j) * fq.f22.block(i * n, j * nx, n, nx);
    }
  }
  return out;
}

Mat fq_to_calf(const FqMatrix& fq) {
  const int n = fq.rows(), nx = fq.nx(), np = fq.np();
  Mat out(n, nx * (1 + np + np * np));
  out.leftCols(nx) = fq.f11;
  for (int i = 0; i < np; ++i) {
    out.middleCols(nx * (1 + i), nx) =
        fq.f12.middleCols(i * nx, nx) + fq.f21.middleRows(i * n, n);
  }
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < np; ++j) {
      out.middleCols(nx * (1 + np + i * np + j), nx) =
          fq.f22.block(i * n, j * nx, n, nx);
    }
  }
  return out;
}

}  // namespace ddlpv
