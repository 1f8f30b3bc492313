#include "ddlpv/expr.hpp"

#include <algorithm>
#include <string>

namespace ddlpv {

Expr::Expr(int rows, int cols) : c_(Mat::Zero(rows, cols)) {}

Expr::Expr(const Mat& constant) : c_(constant) {}

Expr Expr::scalar(double v) { return Expr(Mat::Constant(1, 1, v)); }

Expr Expr::from_terms(int rows, int cols, std::vector<Term> terms) {
  Expr e(rows, cols);
  for (const auto& t : terms) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
      throw DimMismatch("term outside the expression shape");
    }
  }
  e.terms_ = std::move(terms);
  e.canonicalize();
  return e;
}

void Expr::canonicalize() {
  std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
    if (a.var != b.var) return a.var < b.var;
    if (a.col != b.col) return a.col < b.col;
    return a.row < b.row;
  });
  std::vector<Term> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) {
    if (!out.empty() && out.back().var == t.var && out.back().row == t.row &&
        out.back().col == t.col) {
      out.back().coef += t.coef;
    } else {
      out.push_back(t);
    }
  }
  out.erase(std::remove_if(out.begin(), out.end(),
                           [](const Term& t) { return t.coef == 0.0; }),
            out.end());
  terms_ = std::move(out);
}

Expr Expr::transpose() const {
  Expr e(cols(), rows());
  e.c_ = c_.transpose();
  e.terms_.reserve(terms_.size());
  for (const auto& t : terms_) e.terms_.push_back({t.var, t.col, t.row, t.coef});
  e.canonicalize();
  return e;
}

Expr Expr::block(int r, int c, int nr, int nc) const {
  if (r < 0 || c < 0 || r + nr > rows() || c + nc > cols()) {
    throw DimMismatch("expression block out of range");
  }
  Expr e(nr, nc);
  e.c_ = c_.block(r, c, nr, nc);
  for (const auto& t : terms_) {
    if (t.row >= r && t.row < r + nr && t.col >= c && t.col < c + nc) {
      e.terms_.push_back({t.var, t.row - r, t.col - c, t.coef});
    }
  }
  return e;
}

Expr Expr::sym() const {
  if (rows() != cols()) throw DimMismatch("sym of a non-square expression");
  Expr e = *this;
  e += transpose();
  e *= 0.5;
  return e;
}

Mat Expr::value(const Vec& y) const {
  Mat out = c_;
  for (const auto& t : terms_) {
    if (t.var >= y.size()) throw DimMismatch("value vector too short");
    out(t.row, t.col) += t.coef * y(t.var);
  }
  return out;
}

int Expr::max_var() const {
  int m = 0;
  for (const auto& t : terms_) m = std::max(m, t.var + 1);
  return m;
}

Expr& Expr::operator+=(const Expr& o) {
  if (o.rows() != rows() || o.cols() != cols()) {
    throw DimMismatch("adding expressions of shapes " + std::to_string(rows()) +
                      "x" + std::to_string(cols()) + " and " +
                      std::to_string(o.rows()) + "x" + std::to_string(o.cols()));
  }
  c_ += o.c_;
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  canonicalize();
  return *this;
}

Expr& Expr::operator-=(const Expr& o) {
  Expr neg = o;
  neg *= -1.0;
  return *this += neg;
}

Expr& Expr::operator*=(double s) {
  c_ *= s;
  if (s == 0.0) {
    terms_.clear();
  } else {
    for (auto& t : terms_) t.coef *= s;
  }
  return *this;
}

Expr operator+(Expr a, const Mat& b) { return a += Expr(b); }
Expr operator-(Expr a, const Mat& b) { return a -= Expr(b); }

Expr operator*(const Mat& m, const Expr& e) {
  if (m.cols() != e.rows()) throw DimMismatch("matrix-expression product shape");
  Expr out(static_cast<int>(m.rows()), e.cols());
  out.c_ = m * e.c_;
  std::vector<std::vector<std::pair<int, double>>> colnz(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) != 0.0) colnz[j].push_back({static_cast<int>(i), m(i, j)});
    }
  }
  for (const auto& t : e.terms_) {
    for (const auto& [i, v] : colnz[t.row]) {
      out.terms_.push_back({t.var, i, t.col, v * t.coef});
    }
  }
  out.canonicalize();
  return out;
}

Expr operator*(const Expr& e, const Mat& m) {
  if (e.cols() != m.rows()) throw DimMismatch("expression-matrix product shape");
  Expr out(e.rows(), static_cast<int>(m.cols()));
  out.c_ = e.c_ * m;
  std::vector<std::vector<std::pair<int, double>>> rownz(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) rownz[i].push_back({static_cast<int>(j), m(i, j)});
    }
  }
  for (const auto& t : e.terms_) {
    for (const auto& [j, v] : rownz[t.col]) {
      out.terms_.push_back({t.var, t.row, j, v * t.coef});
    }
  }
  out.canonicalize();
  return out;
}

Expr kron(const Mat& a, const Expr& e) {
  const int r = e.rows(), c = e.cols();
  std::vector<Term> terms;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) == 0.0) continue;
      for (const auto& t : e.terms()) {
        terms.push_back({t.var, static_cast<int>(i) * r + t.row,
                         static_cast<int>(j) * c + t.col, a(i, j) * t.coef});
      }
    }
  }
  Expr out = Expr::from_terms(static_cast<int>(a.rows()) * r,
                              static_cast<int>(a.cols()) * c, std::move(terms));
  return out + kron(a, e.constant());
}

Expr trace(const Expr& e) {
  if (e.rows() != e.cols()) throw DimMismatch("trace of a non-square expression");
  std::vector<Term> terms;
  for (const auto& t : e.terms()) {
    if (t.row == t.col) terms.push_back({t.var, 0, 0, t.coef});
  }
  Expr out = Expr::from_terms(1, 1, std::move(terms));
  return out + Mat::Constant(1, 1, e.constant().trace());
}

Expr bmat(const std::vector<std::vector<Expr>>& blocks) {
  if (blocks.empty()) return Expr(0, 0);
  const size_t nbc = blocks[0].size();
  std::vector<int> heights(blocks.size()), widths(nbc);
  for (size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].size() != nbc) throw DimMismatch("bmat: ragged block rows");
    heights[i] = blocks[i][0].rows();
    for (size_t j = 0; j < nbc; ++j) {
      if (blocks[i][j].rows() != heights[i]) {
        throw DimMismatch("bmat: block heights differ in row " + std::to_string(i));
      }
      if (i == 0) widths[j] = blocks[0][j].cols();
      if (blocks[i][j].cols() != widths[j]) {
        throw DimMismatch("bmat: block widths differ in column " + std::to_string(j));
      }
    }
  }
  int total_r = 0, total_c = 0;
  for (int h : heights) total_r += h;
  for (int w : widths) total_c += w;
  Mat c = Mat::Zero(total_r, total_c);
  std::vector<Term> terms;
  int r0 = 0;
  for (size_t i = 0; i < blocks.size(); ++i) {
    int c0 = 0;
    for (size_t j = 0; j < nbc; ++j) {
      const Expr& b = blocks[i][j];
      c.block(r0, c0, heights[i], widths[j]) = b.constant();
      for (const auto& t : b.terms()) {
        terms.push_back({t.var, r0 + t.row, c0 + t.col, t.coef});
      }
      c0 += widths[j];
    }
    r0 += heights[i];
  }
  Expr out = Expr::from_terms(total_r, total_c, std::move(terms));
  return out + c;
}

Expr hstack(const std::vector<Expr>& parts) { return bmat({parts}); }

Expr vstack(const std::vector<Expr>& parts) {
  std::vector<std::vector<Expr>> rows;
  for (const auto& p : parts) rows.push_back({p});
  return bmat(rows);
}

Expr blkdiag(const std::vector<Expr>& parts) {
  std::vector<std::vector<Expr>> rows(parts.size());
  for (size_t i = 0; i < parts.size(); ++i) {
    for (size_t j = 0; j < parts.size(); ++j) {
      rows[i].push_back(i == j ? parts[i] : Expr(parts[i].rows(), parts[j].cols()));
    }
  }
  return bmat(rows);
}

Expr congruence(const Mat& t, const Expr& e) {
  return Mat(t.transpose()) * e * t;
}

}  // namespace ddlpv
