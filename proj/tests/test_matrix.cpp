#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

using namespace ddlpv;
using ddlpv::test::random_mat;

TEST_CASE("kron matches the block definition") {
  Mat a(2, 2), b(1, 2);
  a << 1, 2, 3, 4;
  b << 5, 6;
  Mat expected(2, 4);
  expected << 5, 6, 10, 12, 15, 18, 20, 24;
  CHECK((kron(a, b) - expected).norm() == 0.0);
  CHECK((kron(Mat::Identity(3, 3), Mat::Identity(2, 2)) - Mat::Identity(6, 6)).norm() == 0.0);
}

TEST_CASE("kron mixed-product identity") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = random_mat(2, 3, rng), c = random_mat(3, 2, rng);
    const Mat b = random_mat(3, 1, rng), d = random_mat(1, 4, rng);
    CHECK((kron(a, b) * kron(c, d) - kron(a * c, b * d)).norm() < 1e-12);
  }
}

TEST_CASE("lft_star equals the closed-form upper LFT") {
  std::mt19937_64 rng(3);
  const Mat l11 = 0.2 * random_mat(2, 2, rng), l12 = random_mat(2, 3, rng);
  const Mat l21 = random_mat(4, 2, rng), l22 = random_mat(4, 3, rng);
  Mat delta(2, 2);
  delta << 0.5, 0.0, 0.0, -0.3;
  const Mat direct = l22 + l21 * delta * (Mat::Identity(2, 2) - l11 * delta).inverse() * l12;
  CHECK((lft_star(delta, l11, l12, l21, l22) - direct).norm() < 1e-12);
  CHECK((lft_star(Mat::Zero(2, 2), l11, l12, l21, l22) - l22).norm() == 0.0);
}

TEST_CASE("lft_star rejects a singular loop") {
  const Mat l11 = Mat::Identity(1, 1), d = Mat::Identity(1, 1);
  CHECK_THROWS_AS(lft_star(d, l11, Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1)), SingularLft);
  CHECK_THROWS_AS(lft_star(d, Mat::Zero(2, 2), Mat::Ones(1, 1), Mat::Ones(1, 1), Mat::Zero(1, 1)),
                  DimMismatch);
}

TEST_CASE("pinv_right is a right inverse of minimum norm") {
  std::mt19937_64 rng(11);
  const Mat m = random_mat(3, 7, rng);
  const Mat r = pinv_right(m);
  CHECK((m * r - Mat::Identity(3, 3)).norm() < 1e-12);
  const Mat mp = m.completeOrthogonalDecomposition().pseudoInverse();
  CHECK((r - mp).norm() < 1e-10);
  Mat low(2, 3);
  low << 1, 2, 3, 2, 4, 6;
  CHECK_THROWS_AS(pinv_right(low), RankDeficient);
}

TEST_CASE("numerical rank and eigenvalue helpers") {
  Mat m(3, 3);
  m << 1, 2, 3, 2, 4, 6, 0, 1, 0;
  CHECK(numerical_rank(m) == 2);
  Mat s(2, 2);
  s << 2, 1, 1, 2;
  CHECK(min_eig_sym(s) == doctest::Approx(1.0));
  CHECK(max_eig_sym(s) == doctest::Approx(3.0));
  CHECK(is_pd(s, 0.5));
  CHECK_FALSE(is_pd(s, 1.5));
  Mat asym(2, 2);
  asym << 1, 0, 1, 1;
  CHECK_THROWS_AS(min_eig_sym(asym), NotSymmetric);
  CHECK((sqrtm_psd(s) * sqrtm_psd(s) - s).norm() < 1e-12);
  CHECK_THROWS_AS(sqrtm_psd(-s), WeightNotPsd);
}

TEST_CASE("spectral radius of a scaled rotation") {
  Mat a(2, 2);
  a << 0.0, -0.5, 0.5, 0.0;
  CHECK(spectral_radius(a) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("box vertices enumerate all corners") {
  const Box b(Vec::Constant(2, -1.0), Vec::Constant(2, 2.0));
  const auto v = box_vertices(b);
  REQUIRE(v.size() == 4);
  for (const Vec& x : v) {
    CHECK(b.contains(x));
    for (int i = 0; i < 2; ++i) CHECK((x(i) == -1.0 || x(i) == 2.0));
  }
  CHECK_THROWS_AS(box_vertices(Box::symmetric(13)), TooManyVertices);
  CHECK_THROWS(Box(Vec::Constant(1, 1.0), Vec::Constant(1, 0.0)));
}

TEST_CASE("blkdiag places blocks on the diagonal") {
  const Mat d = blkdiag(std::vector<Mat>{Mat::Ones(1, 2), 2.0 * Mat::Ones(2, 1)});
  CHECK(d.rows() == 3);
  CHECK(d.cols() == 3);
  CHECK(d.block(0, 2, 1, 1)(0, 0) == 0.0);
  CHECK(d(2, 2) == 2.0);
}
