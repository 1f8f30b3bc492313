#include "ddlpv/matrix.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>

namespace ddlpv {

Box::Box(Vec lo, Vec hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size()) {
    throw DimMismatch("box bounds have different lengths");
  }
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw Error("box lower bound exceeds upper bound at index " +
                  std::to_string(i));
    }
  }
}

Box Box::symmetric(int n, double half_width) {
  return Box(Vec::Constant(n, -half_width), Vec::Constant(n, half_width));
}

bool Box::contains(const Vec& p, double tol) const {
  if (p.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] < lower[i] - tol || p[i] > upper[i] + tol) return false;
  }
  return true;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Mat lft_star(const Mat& delta, const Mat& l11, const Mat& l12, const Mat& l21,
             const Mat& l22, double cond_cap) {
  if (l11.rows() != delta.cols() || l11.cols() != delta.rows() ||
      l21.cols() != delta.rows() || l12.rows() != l11.rows() ||
      l21.rows() != l22.rows() || l12.cols() != l22.cols()) {
    throw DimMismatch("lft_star: inconsistent block dimensions");
  }
  const Eigen::Index n = l11.rows();
  Mat lhs = Mat::Identity(n, n) - l11 * delta;
  if (n > 0) {
    Eigen::JacobiSVD<Mat> svd(lhs);
    const auto& s = svd.singularValues();
    double smin = s(s.size() - 1);
    if (!(smin > 0.0) || s(0) / smin > cond_cap) {
      throw SingularLft("lft_star: I - l11*delta is numerically singular");
    }
  }
  if (delta.size() == 0 || delta.isZero(0.0)) return l22;
  return l22 + l21 * delta * lhs.partialPivLu().solve(l12);
}

int numerical_rank(const Mat& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) >= tol * s(0)) ++r;
  }
  return r;
}

Mat pinv_right(const Mat& m, double tol) {
  int r = numerical_rank(m, tol);
  if (r < m.rows()) {
    throw RankDeficient("pinv_right: matrix does not have full row rank (rank " +
                            std::to_string(r) + " < " +
                            std::to_string(m.rows()) + ")",
                        r, static_cast<int>(m.rows()));
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Vec sinv = svd.singularValues().cwiseInverse();
  return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

namespace {

void check_symmetric(const Mat& m, double sym_tol) {
  if (m.rows() != m.cols()) throw DimMismatch("matrix is not square");
  double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > sym_tol * scale) {
    throw NotSymmetric("matrix asymmetry " + std::to_string(asym) +
                       " exceeds tolerance");
  }
}

}  // namespace

double min_eig_sym(const Mat& m, double sym_tol) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  check_symmetric(m, sym_tol);
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eig_sym(const Mat& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

bool is_pd(const Mat& m, double margin) { return min_eig_sym(m) >= margin; }

Mat sqrtm_psd(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m));
  Vec ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-10) {
      throw WeightNotPsd("matrix square root requested for an indefinite matrix");
    }
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<Vec> box_vertices(const Box& b, int cap) {
  const int n = b.dim();
  if (n > cap) {
    throw TooManyVertices("box has " + std::to_string(n) +
                          " dimensions, above the vertex enumeration cap " +
                          std::to_string(cap));
  }
  std::vector<Vec> out;
  const long count = 1L << n;
  for (long mask = 0; mask < count; ++mask) {
    Vec v(n);
    for (int i = 0; i < n; ++i) {
      bool hi = (mask >> (n - 1 - i)) & 1L;
      v(i) = hi ? b.upper(i) : b.lower(i);
    }
    bool dup = false;
    for (const auto& w : out) {
      if (w == v) {
        dup = true;
        break;
      }
    }
    if (!dup) out.push_back(v);
  }
  return out;
}

Mat blkdiag(const std::vector<Mat>& blocks) {
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  Mat out = Mat::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Mat identity(int n) { return Mat::Identity(n, n); }
Mat zeros(int r, int c) { return Mat::Zero(r, c); }
Mat ones(int n) { return Mat::Ones(n, 1); }

double spectral_radius(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace ddlpv
