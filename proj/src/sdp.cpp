#include "ddlpv/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace ddlpv::sdp {

namespace {

Mat apply_a(const Block& b, const Vec& y) {
  Mat out = Mat::Zero(b.n, b.n);
  for (size_t a = 0; a < b.vars.size(); ++a) {
    const double yk = y(b.vars[a]);
    if (yk == 0.0) continue;
    for (const auto& e : b.coefs[a]) {
      out(e.r, e.c) += yk * e.v;
      if (e.r != e.c) out(e.c, e.r) += yk * e.v;
    }
  }
  return out;
}

double trace_prod(const std::vector<Entry>& coefs, const Mat& g) {
  double s = 0.0;
  for (const auto& e : coefs) {
    s += e.v * g(e.c, e.r);
    if (e.r != e.c) s += e.v * g(e.r, e.c);
  }
  return s;
}

void add_adjoint(const Block& b, const Mat& g, Vec& out) {
  for (size_t a = 0; a < b.vars.size(); ++a) {
    out(b.vars[a]) += trace_prod(b.coefs[a], g);
  }
}

/// M_ik += tr(A_i X A_k Z^{-1}) over the variables of one block.
void add_schur(const Block& b, const Mat& x, const Mat& zinv, Mat& m) {
  const int n = b.n;
  std::vector<int> pos(n, -1);
  std::vector<int> rows;
  for (size_t a = 0; a < b.vars.size(); ++a) {
    const auto& ea = b.coefs[a];
    rows.clear();
    for (const auto& e : ea) {
      for (int r : {e.r, e.c}) {
        if (pos[r] < 0) {
          pos[r] = static_cast<int>(rows.size());
          rows.push_back(r);
        }
      }
    }
    const int nr = static_cast<int>(rows.size());
    Mat s = Mat::Zero(nr, n);
    for (const auto& e : ea) {
      s.row(pos[e.r]) += e.v * zinv.row(e.c);
      if (e.r != e.c) s.row(pos[e.c]) += e.v * zinv.row(e.r);
    }
    Mat xr(n, nr);
    for (int j = 0; j < nr; ++j) xr.col(j) = x.col(rows[j]);
    for (int r : rows) pos[r] = -1;
    Mat g = xr * s;
    const int i = b.vars[a];
    for (size_t bb = a; bb < b.vars.size(); ++bb) {
      const double v = trace_prod(b.coefs[bb], g);
      const int k = b.vars[bb];
      m(i, k) += v;
      if (i != k) m(k, i) += v;
    }
  }
}

double max_step(const Mat& s, const Mat& ds) {
  if (s.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::LLT<Mat> llt(s);
  if (llt.info() != Eigen::Success) return 0.0;
  Mat t = llt.matrixL().solve(ds);
  Mat w = llt.matrixL().solve(t.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (w + w.transpose()),
                                        Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double inner(const std::vector<Mat>& a, const std::vector<Mat>& b) {
  double s = 0.0;
  for (size_t j = 0; j < a.size(); ++j) s += a[j].cwiseProduct(b[j]).sum();
  return s;
}

double fro(const std::vector<Mat>& a) {
  double s = 0.0;
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

/// Orthonormal split of the equality-constrained variables: E = [Rᵀ Q1ᵀ, 0]
/// on the variables touched by E, with Q2 spanning the null space there.
/// Variables outside E stay free coordinates.
struct EqBasis {
  std::vector<int> perm;  // touched variables first, then the others
  int q = 0;              // number of touched variables
  int r = 0;              // number of independent equalities
  Mat q1;                 // q x r
  Mat q2;                 // q x (q - r)
  Mat rt;                 // r x r upper triangular, E_q^T = Q1 R

  int reduced() const { return static_cast<int>(perm.size()) - r; }
};

EqBasis make_basis(const Mat& e, int m) {
  EqBasis b;
  b.r = static_cast<int>(e.rows());
  std::vector<int> rest;
  for (int k = 0; k < m; ++k) {
    if (b.r > 0 && e.col(k).cwiseAbs().maxCoeff() > 0.0) {
      b.perm.push_back(k);
    } else {
      rest.push_back(k);
    }
  }
  b.q = static_cast<int>(b.perm.size());
  b.perm.insert(b.perm.end(), rest.begin(), rest.end());
  if (b.r == 0) return b;
  Mat eqt(b.q, b.r);
  for (int i = 0; i < b.q; ++i) eqt.row(i) = e.col(b.perm[i]).transpose();
  Eigen::HouseholderQR<Mat> qr(eqt);
  Mat qfull = qr.householderQ() * Mat::Identity(b.q, b.q);
  b.q1 = qfull.leftCols(b.r);
  b.q2 = qfull.rightCols(b.q - b.r);
  b.rt = qr.matrixQR().topLeftCorner(b.r, b.r).triangularView<Eigen::Upper>();
  return b;
}

struct KktFactor {
  Mat mp;  // Schur complement permuted to the basis ordering
  Mat mz;  // reduced Schur complement
  Eigen::LLT<Mat> llt;
  bool ok = false;
};

/// Projects the Schur complement onto the null space of the equalities and
/// factors it. Structurally free directions (invisible to every LMI and
/// equality) make the reduced matrix singular; a relative diagonal shift keeps
/// the factorization defined and iterative refinement restores accuracy.
KktFactor factor(const Mat& m, const EqBasis& b) {
  KktFactor f;
  const int n = static_cast<int>(b.perm.size());
  const int q = b.q, o = n - q, k = q - b.r;
  f.mp.resize(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) f.mp(i, j) = m(b.perm[i], b.perm[j]);
  }
  f.mz.resize(k + o, k + o);
  if (b.r > 0) {
    Mat t = f.mp.topLeftCorner(q, q) * b.q2;
    f.mz.topLeftCorner(k, k).noalias() = b.q2.transpose() * t;
    f.mz.topRightCorner(k, o).noalias() = b.q2.transpose() * f.mp.topRightCorner(q, o);
    f.mz.bottomLeftCorner(o, k) = f.mz.topRightCorner(k, o).transpose();
    f.mz.bottomRightCorner(o, o) = f.mp.bottomRightCorner(o, o);
  } else {
    f.mz = f.mp;
  }
  const int nz = k + o;
  double dmax = nz > 0 ? f.mz.diagonal().cwiseAbs().maxCoeff() : 1.0;
  if (!(dmax > 0.0)) dmax = 1.0;
  double reg = 1e-13 * dmax;
  for (int attempt = 0; attempt < 10; ++attempt) {
    Mat mr = f.mz;
    mr.diagonal().array() += reg;
    f.llt.compute(mr);
    if (f.llt.info() == Eigen::Success) {
      f.ok = true;
      break;
    }
    reg *= 10.0;
  }
  return f;
}

/// Solves M dy + E^T dl = h, E dy = re in the basis ordering.
void kkt_solve(const KktFactor& f, const EqBasis& b, const Vec& h, const Vec& re,
               Vec& dy, Vec& dl) {
  const int n = static_cast<int>(b.perm.size());
  const int q = b.q, o = n - q, k = q - b.r;
  Vec hp(n);
  for (int i = 0; i < n; ++i) hp(i) = h(b.perm[i]);
  Vec d0 = Vec::Zero(n);
  if (b.r > 0) {
    Vec a = b.rt.transpose().triangularView<Eigen::Lower>().solve(re);
    d0.head(q) = b.q1 * a;
  }
  Vec g = hp - f.mp * d0;
  Vec rhs(k + o);
  if (b.r > 0) {
    rhs.head(k) = b.q2.transpose() * g.head(q);
  } else {
    rhs.head(k) = g.head(q);
  }
  rhs.tail(o) = g.tail(o);
  Vec w = f.llt.solve(rhs);
  for (int it = 0; it < 3; ++it) {
    Vec res = rhs - f.mz * w;
    if (res.norm() <= 1e-15 * std::max(1.0, rhs.norm())) break;
    w += f.llt.solve(res);
  }
  Vec dp = d0;
  if (b.r > 0) {
    dp.head(q) += b.q2 * w.head(k);
  } else {
    dp.head(q) += w.head(k);
  }
  dp.tail(o) += w.tail(o);
  dy.resize(n);
  for (int i = 0; i < n; ++i) dy(b.perm[i]) = dp(i);
  if (b.r > 0) {
    Vec resid = (hp - f.mp * dp).head(q);
    dl = b.rt.triangularView<Eigen::Upper>().solve(b.q1.transpose() * resid);
  } else {
    dl.resize(0);
  }
}

}  // namespace

Result solve(const Problem& prob, const Options& opt) {
  Result res;
  const int m = prob.m;
  const size_t nb = prob.blocks.size();

  // Independent, normalized equality rows.
  Mat e(0, m);
  Vec f(0);
  if (prob.e.rows() > 0) {
    Mat en = prob.e;
    Vec fn = prob.f;
    for (Eigen::Index i = 0; i < en.rows(); ++i) {
      double nr = en.row(i).norm();
      if (nr > 0.0) {
        en.row(i) /= nr;
        fn(i) /= nr;
      }
    }
    Eigen::ColPivHouseholderQR<Mat> qr(en.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index r = qr.rank();
    e.resize(r, m);
    f.resize(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      const Eigen::Index row = qr.colsPermutation().indices()(i);
      e.row(i) = en.row(row);
      f(i) = fn(row);
    }
    for (Eigen::Index i = 0; i < en.rows(); ++i) {
      if (en.row(i).norm() == 0.0 && std::abs(fn(i)) > 1e-12) {
        res.status = Status::Infeasible;
        res.message = "inconsistent constant equality";
        return res;
      }
    }
    if (r > 0) {
      Vec y0 = e.transpose() * (e * e.transpose()).ldlt().solve(f);
      double resid = (en * y0 - fn).norm();
      if (resid > 1e-8 * (1.0 + fn.norm())) {
        res.status = Status::Infeasible;
        res.message = "equality constraints are inconsistent";
        res.y = y0;
        return res;
      }
    }
  }
  const Eigen::Index p = e.rows();
  const EqBasis basis = make_basis(e, m);

  int ntot = 0;
  double cnorm = 0.0;
  for (const auto& b : prob.blocks) {
    ntot += b.n;
    cnorm += b.c.squaredNorm();
  }
  cnorm = std::sqrt(cnorm);
  const double costnorm = prob.cost.norm();
  const double fnorm = f.norm();

  Vec y = Vec::Zero(m);
  if (p > 0) {
    Vec a = basis.rt.transpose().triangularView<Eigen::Lower>().solve(f);
    Vec yq = basis.q1 * a;
    for (int i = 0; i < basis.q; ++i) y(basis.perm[i]) = yq(i);
  }
  Vec lam = Vec::Zero(p);
  std::vector<Mat> x(nb), z(nb);
  for (size_t j = 0; j < nb; ++j) {
    const auto& b = prob.blocks[j];
    double amax = 0.0;
    for (size_t a = 0; a < b.vars.size(); ++a) {
      double s = 0.0;
      for (const auto& en : b.coefs[a]) s += en.v * en.v * (en.r == en.c ? 1.0 : 2.0);
      amax = std::max(amax, std::sqrt(s));
      (void)a;
    }
    const double sq = std::sqrt(static_cast<double>(b.n));
    Mat ay = apply_a(b, y);
    double zeta = std::max({10.0, sq, b.c.norm(), amax, (b.c + ay).norm()});
    double xi = std::max({10.0, sq, sq * (1.0 + costnorm) / (1.0 + amax)});
    z[j] = zeta * Mat::Identity(b.n, b.n);
    x[j] = xi * Mat::Identity(b.n, b.n);
  }

  std::vector<Mat> zinv(nb), rp(nb);
  double best_merit = std::numeric_limits<double>::infinity();
  Vec best_y = y;
  double best_pinf = 0, best_dinf = 0, best_gap = 0, best_pobj = 0, best_dobj = 0;
  int small_steps = 0;

  for (int it = 0; it <= opt.max_iter; ++it) {
    res.iterations = it;
    bool chol_ok = true;
    for (size_t j = 0; j < nb; ++j) {
      Eigen::LLT<Mat> llt(z[j]);
      if (llt.info() != Eigen::Success) {
        chol_ok = false;
        break;
      }
      zinv[j] = llt.solve(Mat::Identity(z[j].rows(), z[j].cols()));
      zinv[j] = sym(zinv[j]);
    }
    if (!chol_ok) {
      res.message = "slack matrix lost definiteness";
      break;
    }
    double rpn = 0.0;
    Vec aadj = Vec::Zero(m);
    double cx = 0.0;
    for (size_t j = 0; j < nb; ++j) {
      const auto& b = prob.blocks[j];
      rp[j] = b.c + apply_a(b, y) - z[j];
      rpn += rp[j].squaredNorm();
      add_adjoint(b, x[j], aadj);
      cx += b.c.cwiseProduct(x[j]).sum();
    }
    rpn = std::sqrt(rpn);
    Vec etl = p > 0 ? Vec(e.transpose() * lam) : Vec::Zero(m);
    Vec rd = prob.cost - aadj - etl;
    Vec re = p > 0 ? Vec(f - e * y) : Vec(0);
    const double pobj = prob.cost.dot(y);
    const double dobj = -cx + (p > 0 ? f.dot(lam) : 0.0);
    const double xz = inner(x, z);
    const double mu = ntot > 0 ? xz / ntot : 0.0;
    const double pinf = std::max(rpn / (1.0 + cnorm),
                                 p > 0 ? re.norm() / (1.0 + fnorm) : 0.0);
    const double dinf = rd.norm() / (1.0 + costnorm);
    const double denom = 1.0 + std::abs(pobj) + std::abs(dobj);
    const double gap = std::max(std::abs(pobj - dobj), std::abs(xz)) / denom;
    res.pinf = pinf;
    res.dinf = dinf;
    res.gap = gap;
    res.pobj = pobj;
    res.dobj = dobj;
    if (opt.verbose) {
      std::fprintf(stderr, "%3d pobj %+.8e dobj %+.8e pinf %.2e dinf %.2e gap %.2e mu %.2e\n",
                   it, pobj, dobj, pinf, dinf, gap, mu);
    }
    const double merit = std::max({pinf, dinf, gap});
    if (pinf < 10 * opt.tol_feas && merit < best_merit) {
      best_merit = merit;
      best_y = y;
      best_pinf = pinf;
      best_dinf = dinf;
      best_gap = gap;
      best_pobj = pobj;
      best_dobj = dobj;
    }
    if (pinf < opt.tol_feas && dinf < opt.tol_feas && gap < opt.tol_gap) {
      res.status = Status::Optimal;
      res.y = y;
      res.x = x;
      res.lambda = lam;
      res.message = "converged";
      return res;
    }
    // Infeasibility certificate: X >= 0, lambda with A*(X) + E^T lambda ~ 0
    // and a positive dual objective.
    {
      const double ray = (aadj + etl).norm();
      const double xn = fro(x);
      if (dobj > 0.0 && it > 3 && ray / dobj < opt.tol_infeas &&
          dobj > 1e-6 * xn) {
        res.status = Status::Infeasible;
        res.y = y;
        res.x = x;
        res.lambda = lam;
        res.message = "dual ray certifies primal infeasibility";
        return res;
      }
      if (pobj < -1e12 * (1.0 + costnorm) && pinf < 1e-6) {
        res.status = Status::Unbounded;
        res.y = y;
        res.message = "objective unbounded below";
        return res;
      }
    }
    if (it == opt.max_iter) {
      res.message = "iteration limit reached";
      break;
    }

    Mat mm = Mat::Zero(m, m);
    for (size_t j = 0; j < nb; ++j) add_schur(prob.blocks[j], x[j], zinv[j], mm);
    KktFactor fac = factor(mm, basis);
    if (!fac.ok) {
      res.message = "Schur complement factorization failed";
      break;
    }

    auto direction = [&](double sigma_mu, const std::vector<Mat>* corr,
                         Vec& dy, Vec& dl, std::vector<Mat>& dz,
                         std::vector<Mat>& dx) {
      Vec h = -rd;
      std::vector<Mat> q(nb);
      for (size_t j = 0; j < nb; ++j) {
        q[j] = sigma_mu * zinv[j] - x[j] - x[j] * rp[j] * zinv[j];
        if (corr) q[j] -= (*corr)[j];
        add_adjoint(prob.blocks[j], q[j], h);
      }
      Vec dlp;
      kkt_solve(fac, basis, h, re, dy, dlp);
      dl = -dlp;
      for (size_t j = 0; j < nb; ++j) {
        dz[j] = apply_a(prob.blocks[j], dy) + rp[j];
        Mat t = sigma_mu * zinv[j] - x[j] - x[j] * dz[j] * zinv[j];
        if (corr) t -= (*corr)[j];
        dx[j] = sym(t);
      }
    };

    Vec dy, dl;
    std::vector<Mat> dz(nb), dx(nb);
    direction(0.0, nullptr, dy, dl, dz, dx);
    double ap = 1.0, ad = 1.0;
    for (size_t j = 0; j < nb; ++j) {
      ap = std::min(ap, max_step(z[j], dz[j]));
      ad = std::min(ad, max_step(x[j], dx[j]));
    }
    double mu_aff = 0.0;
    for (size_t j = 0; j < nb; ++j) {
      mu_aff += (x[j] + ad * dx[j]).cwiseProduct(z[j] + ap * dz[j]).sum();
    }
    mu_aff /= std::max(1, ntot);
    double sigma = mu > 0.0 ? std::pow(std::max(0.0, mu_aff) / mu, 3.0) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);
    const double expon_min = std::min(ap, ad);
    if (expon_min < 0.2) sigma = std::max(sigma, 0.5);
    std::vector<Mat> corr(nb);
    for (size_t j = 0; j < nb; ++j) corr[j] = dx[j] * dz[j] * zinv[j];
    direction(sigma * mu, &corr, dy, dl, dz, dx);
    double sp = std::numeric_limits<double>::infinity();
    double sd = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < nb; ++j) {
      sp = std::min(sp, max_step(z[j], dz[j]));
      sd = std::min(sd, max_step(x[j], dx[j]));
    }
    const double tau = 0.9 + 0.09 * std::min(ap, ad);
    ap = std::min(1.0, tau * sp);
    ad = std::min(1.0, tau * sd);
    if (!std::isfinite(ap) || !std::isfinite(ad) || !dy.allFinite()) {
      res.message = "non-finite search direction";
      break;
    }
    y += ap * dy;
    for (size_t j = 0; j < nb; ++j) {
      z[j] = sym(z[j] + ap * dz[j]);
      x[j] = sym(x[j] + ad * dx[j]);
    }
    if (p > 0) lam += ad * dl;
    small_steps = (std::max(ap, ad) < 1e-8) ? small_steps + 1 : 0;
    if (small_steps >= 3) {
      res.message = "step length stagnation";
      break;
    }
  }

  if (std::isfinite(best_merit)) {
    res.status = Status::Feasible;
    res.y = best_y;
    res.pinf = best_pinf;
    res.dinf = best_dinf;
    res.gap = best_gap;
    res.pobj = best_pobj;
    res.dobj = best_dobj;
    res.message += "; returning best primal-feasible iterate";
  } else {
    res.status = Status::Failure;
    res.y = y;
  }
  res.x = x;
  res.lambda = lam;
  return res;
}

}  // namespace ddlpv::sdp
