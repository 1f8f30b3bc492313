#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

#include "ddlpv/sdp.hpp"

using namespace ddlpv;

TEST_CASE("expression algebra evaluates like dense matrices") {
  LmiProblem prob;
  const Expr x = prob.rect_var("X", 2, 3);
  std::mt19937_64 rng(1);
  const Mat a = test::random_mat(4, 2, rng), b = test::random_mat(3, 2, rng);
  Vec y = Vec::LinSpaced(prob.num_scalars(), -1.0, 2.0);
  const Mat xv = prob.var_value(prob.var("X"), y);
  CHECK(((a * x * b).value(y) - a * xv * b).norm() < 1e-12);
  CHECK((x.transpose().value(y) - xv.transpose()).norm() == 0.0);
  CHECK((kron(Mat::Identity(2, 2), x).value(y) - kron(Mat::Identity(2, 2), xv)).norm() == 0.0);
  const Expr p = prob.sym_var("P", 3);
  y = Vec::LinSpaced(prob.num_scalars(), 0.5, 1.5);
  const Mat pv = prob.var_value(prob.var("P"), y);
  CHECK((pv - pv.transpose()).norm() == 0.0);
  CHECK(trace(p).value(y)(0, 0) == doctest::Approx(pv.trace()));
  CHECK((congruence(b, p).value(y) - b.transpose() * pv * b).norm() < 1e-12);
  CHECK_THROWS(bmat({{x, p}}));
}

TEST_CASE("smallest t with [t 1; 1 t] >= 0 is one") {
  LmiProblem prob;
  const Expr t = prob.scalar_var("t");
  prob.add_psd("cone", bmat({{t, Expr::scalar(1.0)}, {Expr::scalar(1.0), t}}), false);
  prob.minimize(t);
  const LmiSolution s = solve(prob);
  REQUIRE(s.ok());
  CHECK(s.scalar("t") == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("largest eigenvalue as an SDP") {
  Mat a(3, 3);
  a << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  LmiProblem prob;
  const Expr t = prob.scalar_var("t");
  prob.add_psd("bound", kron(Mat::Identity(3, 3), t) - Expr(a), false);
  prob.minimize(t);
  const LmiSolution s = solve(prob);
  REQUIRE(s.ok());
  CHECK(s.scalar("t") == doctest::Approx(max_eig_sym(a)).epsilon(1e-6));
}

TEST_CASE("equality constraints are honoured") {
  LmiProblem prob;
  const Expr x = prob.scalar_var("x"), y = prob.scalar_var("y");
  prob.add_psd("x", x, false);
  prob.add_psd("y", y, false);
  prob.add_equality("sum", x + y - Mat::Ones(1, 1));
  prob.minimize(2.0 * x + y);
  const LmiSolution s = solve(prob);
  REQUIRE(s.ok());
  CHECK(s.scalar("x") == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(s.scalar("y") == doctest::Approx(1.0).epsilon(1e-6));
  for (const auto& row : residual_report(prob, s)) CHECK_FALSE(row.violated);
}

TEST_CASE("contradictory bounds are infeasible") {
  LmiProblem prob;
  const Expr x = prob.scalar_var("x");
  prob.add_ge("lower", x, 1.0);
  prob.add_le("upper", x, Expr::scalar(0.0));
  CHECK(solve(prob).status == SolveStatus::Infeasible);
}

TEST_CASE("Lyapunov LMI is feasible exactly for Schur matrices") {
  Mat stable(2, 2), unstable(2, 2);
  stable << 0.5, 1.0, 0.0, 0.6;
  unstable << 1.05, 0.2, 0.0, 0.3;
  for (const auto& [a, expect] : {std::pair{stable, true}, std::pair{unstable, false}}) {
    LmiProblem prob;
    const Expr p = prob.sym_var("P", 2);
    prob.add_ge("P", p, 1.0);
    prob.add_psd("decrease", p - congruence(a, p));
    const LmiSolution s = solve(prob);
    CHECK(s.ok() == expect);
    if (s.ok()) {
      const Mat pv = s.at("P");
      CHECK(min_eig_sym(pv - a.transpose() * pv * a) > 0.0);
    }
  }
}

TEST_CASE("raw SDP solver on a two-block problem") {
  sdp::Problem pr;
  pr.m = 1;
  sdp::Block b1;
  b1.n = 1;
  b1.c = Mat::Constant(1, 1, -1.0);
  b1.vars = {0};
  b1.coefs = {{{0, 0, 1.0}}};
  sdp::Block b2;
  b2.n = 1;
  b2.c = Mat::Constant(1, 1, 3.0);
  b2.vars = {0};
  b2.coefs = {{{0, 0, -1.0}}};
  pr.blocks = {b1, b2};
  pr.cost = Vec::Ones(1);
  pr.e = Mat::Zero(0, 1);
  pr.f = Vec::Zero(0);
  const sdp::Result r = sdp::solve(pr, sdp::Options{});
  REQUIRE(r.status == sdp::Status::Optimal);
  CHECK(r.y(0) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kron_delta stacks p_i I_n per block size") {
  LftSpec lft;
  lft.delta_struct = kron_delta(2, {1, 2});
  Vec p(2);
  p << 0.3, -0.7;
  const Mat d = lft.delta(p);
  Vec expected(6);
  expected << 0.3, -0.7, 0.3, 0.3, -0.7, -0.7;
  CHECK((d - Mat(expected.asDiagonal())).norm() == 0.0);
}

TEST_CASE("asymmetric LMI expressions are rejected") {
  LmiProblem prob;
  const Expr x = prob.rect_var("X", 2, 2);
  CHECK_THROWS_AS(prob.add_psd("bad", x), NotSymmetric);
}
