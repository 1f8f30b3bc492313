#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ddlpv/errors.hpp"

namespace ddlpv {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Axis-aligned scheduling box.
struct Box {
  Vec lower;
  Vec upper;

  Box() = default;
  Box(Vec lo, Vec hi);
  static Box symmetric(int n, double half_width = 1.0);
  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vec& p, double tol = 1e-9) const;
};

Mat kron(const Mat& a, const Mat& b);

/// Upper LFT: l22 + l21 * delta * (I - l11 * delta)^{-1} * l12.
Mat lft_star(const Mat& delta, const Mat& l11, const Mat& l12, const Mat& l21,
             const Mat& l22, double cond_cap = 1e12);

/// Minimum-norm right inverse of a full-row-rank matrix.
Mat pinv_right(const Mat& m, double tol = 1e-8);

/// Numerical rank with threshold tol * sigma_max.
int numerical_rank(const Mat& m, double tol = 1e-8);

double min_eig_sym(const Mat& m, double sym_tol = 1e-10);
bool is_pd(const Mat& m, double margin);
double max_eig_sym(const Mat& m);

Mat symmetrize(const Mat& m);

/// Symmetric PSD square root with negative eigenvalues above -1e-10 clamped.
Mat sqrtm_psd(const Mat& m);

std::vector<Vec> box_vertices(const Box& b, int cap = 12);

/// Block-diagonal concatenation.
Mat blkdiag(const std::vector<Mat>& blocks);

Mat identity(int n);
Mat zeros(int r, int c);

/// Column vector of ones.
Mat ones(int n);

double spectral_radius(const Mat& a);

}  // namespace ddlpv
