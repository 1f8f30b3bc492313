#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

using namespace ddlpv;

namespace {

Dims dims_of(const LpvSs& s) { return {s.nx(), s.nu(), s.np()}; }

}  // namespace

TEST_CASE("open-loop representation recovers the plant matrices") {
  for (const LpvSs& s : {study1_system(), study2_system()}) {
    const int cols = (s.nx() + s.nu()) * (1 + s.np());
    const DataMatrices dm = build_matrices(excite(s, cols, 9));
    const OpenLoopRep rep = open_loop_rep(dm);
    CHECK((rep.xplus * rep.dp_pinv - s.stacked()).norm() <= 1e-8);
  }
}

TEST_CASE("one-step prediction on a held-out sample") {
  const LpvSs s = study2_system();
  const DataDictionary d = excite(s, 16, 12);
  DataDictionary train = d;
  train.x = d.x.leftCols(16);
  train.u = d.u.leftCols(16);
  train.p = d.p.leftCols(16);
  const OpenLoopRep rep = open_loop_rep(build_matrices(train));
  const Vec pred = rep.predict(d.x.col(15), d.p.col(15), d.u.col(15));
  CHECK((pred - d.x.col(16)).norm() <= 1e-8);
}

TEST_CASE("non-exciting data is rejected") {
  const DataMatrices dm = build_matrices(excite(study1_system(), 6, 1));
  CHECK_THROWS_AS(open_loop_rep(dm), RankDeficient);
}

TEST_CASE("closed-loop data representation matches the model on a grid") {
  const LpvSs s = study2_system();
  const DataMatrices dm = build_matrices(excite(s, 15, 2));
  const auto k = test::controller({{-0.2553, 0.1265, -0.3894, -0.4131},
                                   {-0.3066, 0.1611, -0.0445, -0.4056},
                                   {-0.0844, 0.0389, -0.0652, -0.1650}});
  const Mat v = solve_v(dm, k);
  CHECK((dm.dp * v - mcl_matrix(k, dims_of(s))).norm() < 1e-8);
  const GridSpec g(10, s.p_set);
  double worst = 0.0;
  for (const Vec& p : g.points()) {
    worst = std::max(worst, (closed_loop_from_data(dm.xplus, v, p) - closed_loop_a(s, k, p)).norm());
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("M_CL has the documented block layout") {
  const auto k = test::controller({{1, 2}, {3, 4}, {5, 6}});
  const Mat m = mcl_matrix(k, Dims{2, 1, 2});
  CHECK(m.rows() == 9);
  CHECK(m.cols() == 14);
  CHECK((m.block(0, 0, 2, 2) - Mat::Identity(2, 2)).norm() == 0.0);
  CHECK((m.block(2, 2, 4, 4) - Mat::Identity(4, 4)).norm() == 0.0);
  CHECK((m.block(6, 0, 1, 2) - k.k[0]).norm() == 0.0);
  CHECK((m.block(6, 2, 1, 4) - k.kbar()).norm() == 0.0);
  CHECK((m.block(7, 2, 2, 4) - kron(Mat::Identity(2, 2), k.k[0])).norm() == 0.0);
  CHECK((m.block(7, 6, 2, 8) - kron(Mat::Identity(2, 2), k.kbar())).norm() == 0.0);
}

TEST_CASE("controller recovery roundtrip") {
  const LpvSs s = study1_system();
  const DataMatrices dm = build_matrices(excite(s, 9, 3));
  const auto k = test::controller({{0.4, -0.2}, {0.1, 0.05}, {-0.3, 0.2}});
  const auto back = recover_controller(dm.u_mat, solve_v(dm, k), dims_of(s));
  for (int i = 0; i < 3; ++i) CHECK((back.k[i] - k.k[i]).norm() < 1e-10);
}

TEST_CASE("fq_eval agrees with fq_to_calf times the polynomial basis") {
  std::mt19937_64 rng(21);
  const int rows = 5, nx = 3, np = 2;
  FqMatrix fq{test::random_mat(rows, nx, rng), test::random_mat(rows, np * nx, rng),
              test::random_mat(np * rows, nx, rng), test::random_mat(np * rows, np * nx, rng)};
  const Mat calf = fq_to_calf(fq);
  for (int t = 0; t < 10; ++t) {
    const Vec p = test::random_mat(np, 1, rng);
    CHECK((fq_eval(fq, p) - calf * poly_basis(p, nx)).norm() < 1e-12);
    const Mat direct = affine_basis(p, rows).transpose() * fq.assembled() * affine_basis(p, nx);
    CHECK((fq_eval(fq, p) - direct).norm() < 1e-12);
  }
  const FqMatrix back = FqMatrix::from_assembled(fq.assembled(), rows, nx, np);
  CHECK((back.f22 - fq.f22).norm() == 0.0);
}
