#pragma once

#include <vector>

#include "ddlpv/matrix.hpp"

namespace ddlpv {

/// One scalar coefficient of a decision variable inside a matrix expression.
struct Term {
  int var;
  int row;
  int col;
  double coef;
};

/// Matrix expression affine in the scalar decision variables:
/// constant + sum_k y_k * (sparse coefficient matrix of k).
class Expr {
 public:
  Expr() = default;
  Expr(int rows, int cols);
  explicit Expr(const Mat& constant);
  static Expr scalar(double v);
  static Expr from_terms(int rows, int cols, std::vector<Term> terms);

  int rows() const { return static_cast<int>(c_.rows()); }
  int cols() const { return static_cast<int>(c_.cols()); }
  const Mat& constant() const { return c_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  Expr transpose() const;
  Expr block(int r, int c, int nr, int nc) const;
  Expr sym() const;
  Mat value(const Vec& y) const;
  /// Largest variable index referenced plus one.
  int max_var() const;

  Expr& operator+=(const Expr& o);
  Expr& operator-=(const Expr& o);
  Expr& operator*=(double s);

  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }
  friend Expr operator-(Expr a) { return a *= -1.0; }
  friend Expr operator*(double s, Expr a) { return a *= s; }
  friend Expr operator*(const Mat& m, const Expr& e);
  friend Expr operator*(const Expr& e, const Mat& m);

 private:
  void canonicalize();
  Mat c_;
  std::vector<Term> terms_;
};

Expr operator+(Expr a, const Mat& b);
Expr operator-(Expr a, const Mat& b);
Expr kron(const Mat& a, const Expr& e);
Expr trace(const Expr& e);
/// Block matrix from rows of expressions; every block row must agree in
/// height and every block column in width.
Expr bmat(const std::vector<std::vector<Expr>>& blocks);
Expr hstack(const std::vector<Expr>& parts);
Expr vstack(const std::vector<Expr>& parts);
Expr blkdiag(const std::vector<Expr>& parts);
/// Congruence t^T e t.
Expr congruence(const Mat& t, const Expr& e);

}  // namespace ddlpv
