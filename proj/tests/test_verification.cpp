#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

using namespace ddlpv;

TEST_CASE("grid sizing and ordering") {
  const GridSpec g = GridSpec::with_total(Box::symmetric(2), 250);
  CHECK(g.points_per_axis == 16);
  CHECK(g.size() == 256);
  const auto pts = g.points();
  CHECK(pts.front()(0) == -1.0);
  CHECK(pts.front()(1) == -1.0);
  CHECK(pts[1](0) == -1.0);
  CHECK(pts[1](1) > -1.0);
  CHECK(pts.back()(0) == 1.0);
  CHECK(GridSpec::with_total(Box::symmetric(1), 250).size() == 250);
  CHECK(GridSpec(10, Box::symmetric(2)).size() == 100);
}

TEST_CASE("frozen H2 norm matches the impulse-response series") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t) {
    Mat a = test::random_mat(3, 3, rng);
    a *= 0.8 / spectral_radius(a);
    const Mat c = test::random_mat(2, 3, rng);
    CHECK(frozen_h2_norm(a, c) == doctest::Approx(test::h2_series(a, c)).epsilon(1e-8));
  }
}

TEST_CASE("frozen H-infinity norm matches a dense frequency sweep") {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 5; ++t) {
    Mat a = test::random_mat(4, 4, rng);
    a *= 0.9 / spectral_radius(a);
    const Mat c = test::random_mat(2, 4, rng);
    const double sweep = test::hinf_sweep(a, c);
    const double h = frozen_hinf_norm(a, c);
    CHECK(h >= sweep * (1.0 - 1e-6));
    CHECK(h <= sweep * (1.0 + 1e-3));
  }
}

TEST_CASE("scalar systems have closed-form norms") {
  const Mat a = Mat::Constant(1, 1, 0.5), c = Mat::Ones(1, 1);
  CHECK(frozen_h2_norm(a, c) == doctest::Approx(std::sqrt(1.0 / 0.75)));
  CHECK(frozen_hinf_norm(a, c) == doctest::Approx(2.0).epsilon(1e-4));
  const Mat b = Mat::Constant(1, 1, -0.5);
  CHECK(frozen_hinf_norm(b, c) == doctest::Approx(2.0).epsilon(1e-4));
}

TEST_CASE("grid validators report the worst point") {
  const LpvSs s = study2_system();
  const auto k = test::controller({{-0.2553, 0.1265, -0.3894, -0.4131},
                                   {-0.3066, 0.1611, -0.0445, -0.4056},
                                   {-0.0844, 0.0389, -0.0652, -0.1650}});
  const GridSpec g(10, s.p_set);
  const GridResult r = grid_spectral_radius(s, k, g);
  double worst = 0.0;
  for (const Vec& p : g.points()) worst = std::max(worst, spectral_radius(closed_loop_a(s, k, p)));
  CHECK(r.value == doctest::Approx(worst));
  CHECK(spectral_radius(closed_loop_a(s, k, r.argmax)) == doctest::Approx(worst));
}

TEST_CASE("norms on an unstable grid point are refused") {
  const LpvSs s = study2_system();
  const auto bad = test::controller({{2, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
  const PerfWeights w{Mat::Identity(4, 4), Mat::Identity(1, 1)};
  CHECK_THROWS_AS(grid_h2_norm(s, bad, w, GridSpec(4, s.p_set)), UnstableAtGridPoint);
  CHECK_THROWS_AS(grid_hinf_norm(s, bad, w, GridSpec(4, s.p_set)), UnstableAtGridPoint);
  const VerifyReport v = verify(s, bad, w, std::nullopt);
  CHECK(v.grid_rho.value > 1.0);
  CHECK_FALSE(v.grid_h2.has_value());
}

TEST_CASE("Lyapunov decrease check") {
  const Mat p = Mat::Identity(2, 2);
  Mat contracting(2, 3);
  contracting << 1.0, 0.5, 0.25, 1.0, 0.5, 0.25;
  CHECK(lyapunov_decrease_check(p, {contracting}).pass);
  Mat growing = contracting.rowwise().reverse();
  const LyapunovCheck bad = lyapunov_decrease_check(p, {growing});
  CHECK_FALSE(bad.pass);
  CHECK(bad.worst_margin > 0.0);
  const LyapunovCheck vacuous = lyapunov_decrease_check(p, {Mat::Zero(2, 5)});
  CHECK(vacuous.pass);
  CHECK(vacuous.steps_checked == 0);
}

TEST_CASE("model analysis certifies what the data-driven synthesis certified") {
  const LpvSs s = study1_system();
  const DataMatrices dm = build_matrices(excite(s, 9, 2));
  SynthesisRequest req;
  const SynthesisResult r = synth_stabilizing(dm, s.p_set, req);
  REQUIRE(r.ok());
  CHECK(model_analyze_stability(s, r.ctrl, s.p_set).ok());
  const VerifyReport v = verify(s, r.ctrl, std::nullopt, r.cert.p_mat);
  REQUIRE(v.lyap.has_value());
  CHECK(v.lyap->pass);
  CHECK(v.lyap->steps_checked > 0);
}

TEST_CASE("simulated l2 gain stays below the frozen and certified bounds") {
  const LpvSs s = study1_system();
  const DataMatrices dm = build_matrices(excite(s, 9, 2));
  SynthesisRequest req;
  req.mode = Mode::L2;
  req.weights = PerfWeights{Mat::Identity(2, 2), Mat::Identity(1, 1)};
  const SynthesisResult r = synth_l2(dm, s.p_set, req);
  REQUIRE(r.ok());
  const double sim = simulated_l2_gain(s, r.ctrl, *req.weights, 50, 200, 3);
  CHECK(sim > 0.0);
  CHECK(sim <= *r.cert.gamma * (1.0 + 1e-3));
}
