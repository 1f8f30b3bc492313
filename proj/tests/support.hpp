#pragma once

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "ddlpv/benchmarks.hpp"

namespace ddlpv::test {

inline Mat random_mat(int r, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Mat m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = d(rng);
  }
  return m;
}

/// Truncated series sqrt(sum_k ||C A^k||_F^2).
inline double h2_series(const Mat& a, const Mat& c, int terms = 20000) {
  Mat ak = Mat::Identity(a.rows(), a.cols());
  double s = 0.0;
  for (int k = 0; k < terms; ++k) {
    s += (c * ak).squaredNorm();
    ak = a * ak;
    if (ak.norm() < 1e-18) break;
  }
  return std::sqrt(s);
}

/// Largest singular value of C (e^{jw} I - A)^{-1} over a uniform frequency grid.
inline double hinf_sweep(const Mat& a, const Mat& c, int points = 20000) {
  using Cx = std::complex<double>;
  const int n = static_cast<int>(a.rows());
  double best = 0.0;
  for (int i = 0; i <= points; ++i) {
    const double w = std::acos(-1.0) * i / points;
    Eigen::MatrixXcd m = std::exp(Cx(0.0, w)) * Eigen::MatrixXcd::Identity(n, n) - a.cast<Cx>();
    Eigen::MatrixXcd g = c.cast<Cx>() * m.inverse();
    best = std::max(best, Eigen::JacobiSVD<Eigen::MatrixXcd>(g).singularValues()(0));
  }
  return best;
}

inline StateFeedbackController controller(std::initializer_list<std::initializer_list<double>> ks) {
  StateFeedbackController c;
  for (const auto& k : ks) {
    Mat m(1, static_cast<int>(k.size()));
    int j = 0;
    for (double v : k) m(0, j++) = v;
    c.k.push_back(m);
  }
  return c;
}

inline std::string source_path(const std::string& rel) {
  return std::string(DDLPV_SOURCE_DIR) + "/" + rel;
}

}  // namespace ddlpv::test
