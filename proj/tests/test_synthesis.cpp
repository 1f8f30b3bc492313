#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "support.hpp"

using namespace ddlpv;

namespace {

const LpvSs& s1() {
  static const LpvSs s = study1_system();
  return s;
}
const LpvSs& s2() {
  static const LpvSs s = study2_system();
  return s;
}
const DataMatrices& dm1() {
  static const DataMatrices dm = build_matrices(excite(s1(), 9, 1));
  return dm;
}
const DataMatrices& dm2() {
  static const DataMatrices dm = build_matrices(excite(s2(), 15, 1));
  return dm;
}

PerfWeights unit_weights(int nx) { return {Mat::Identity(nx, nx), Mat::Identity(1, 1)}; }

}  // namespace

TEST_CASE("mode names roundtrip") {
  for (Mode m : {Mode::Analyze, Mode::Stabilize, Mode::Quadratic, Mode::H2, Mode::L2, Mode::Noisy}) {
    CHECK(mode_from_string(to_string(m)) == m);
  }
  CHECK(mode_from_string("noisy-stabilize") == Mode::Noisy);
  CHECK_THROWS(mode_from_string("hinf"));
}

TEST_CASE("study 1 robust quadratic controller") {
  SynthesisRequest req;
  req.mode = Mode::Quadratic;
  req.weights = unit_weights(2);
  req.robust = true;
  const SynthesisResult dd = synth_quadratic(dm1(), s1().p_set, req);
  REQUIRE(dd.ok());
  CHECK(std::abs(dd.ctrl.k[0](0, 0) - 0.4832) <= 1e-2);
  CHECK(std::abs(dd.ctrl.k[0](0, 1) - 0.4839) <= 1e-2);
  CHECK(dd.ctrl.kbar().norm() <= 1e-6);
  CHECK(dd.self_check.value_or(false));
  const SynthesisResult mb = model_synth(s1(), s1().p_set, req);
  REQUIRE(mb.ok());
  CHECK((dd.ctrl.k[0] - mb.ctrl.k[0]).cwiseAbs().maxCoeff() <= 1e-2);
}

TEST_CASE("robust restriction pins the scheduled gains") {
  const SynthesisRequest r = apply_robust_restriction(SynthesisRequest{});
  CHECK(r.robust);
}

TEST_CASE("study 2 stabilizing controllers certify on the model") {
  SynthesisRequest req;
  req.trace_box = Interval{0.1, 10.0};
  const SynthesisResult dd = synth_stabilizing(dm2(), s2().p_set, req);
  REQUIRE(dd.ok());
  const double tr = dd.cert.p_mat.trace();
  CHECK(tr >= 0.1 - 1e-6);
  CHECK(tr <= 10.0 + 1e-6);
  CHECK(model_analyze_stability(s2(), dd.ctrl, s2().p_set).ok());
  CHECK(grid_spectral_radius(s2(), dd.ctrl, GridSpec(10, s2().p_set)).value < 1.0);
  const SynthesisResult mb = model_synth(s2(), s2().p_set, req);
  REQUIRE(mb.ok());
  CHECK(model_analyze_stability(s2(), mb.ctrl, s2().p_set).ok());
}

TEST_CASE("reference stabilizing gains pass both analysis oracles") {
  const auto kdd = test::controller({{-0.2553, 0.1265, -0.3894, -0.4131},
                                     {-0.3066, 0.1611, -0.0445, -0.4056},
                                     {-0.0844, 0.0389, -0.0652, -0.1650}});
  CHECK(analyze_stability(dm2(), kdd, s2().p_set).ok());
  CHECK(model_analyze_stability(s2(), kdd, s2().p_set).ok());
}

TEST_CASE("a destabilizing controller fails analysis") {
  const auto bad = test::controller({{2, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}});
  CHECK(grid_spectral_radius(s2(), bad, GridSpec(10, s2().p_set)).value > 1.0);
  CHECK_FALSE(analyze_stability(dm2(), bad, s2().p_set).ok());
}

TEST_CASE("study 2 quadratic performance: data and model agree") {
  SynthesisRequest req;
  req.mode = Mode::Quadratic;
  req.weights = unit_weights(4);
  const SynthesisResult dd = synth_quadratic(dm2(), s2().p_set, req);
  const SynthesisResult mb = model_synth(s2(), s2().p_set, req);
  REQUIRE(dd.ok());
  REQUIRE(mb.ok());
  CHECK(dd.cert.p_mat.trace() == doctest::Approx(0.9151).epsilon(0.02));
  CHECK(dd.cert.p_mat.trace() == doctest::Approx(mb.cert.p_mat.trace()).epsilon(1e-2));
}

TEST_CASE("h2 minimization and gamma monotonicity") {
  SynthesisRequest req;
  req.mode = Mode::H2;
  req.weights = unit_weights(4);
  const SynthesisResult opt = synth_h2(dm2(), s2().p_set, req);
  REQUIRE(opt.ok());
  const double g = *opt.cert.gamma;
  const GridSpec grid = GridSpec::with_total(s2().p_set, 250);
  CHECK(grid_h2_norm(s2(), opt.ctrl, *req.weights, grid).value <= g * (1.0 + 1e-3));
  req.gamma = 1.05 * g;
  CHECK(synth_h2(dm2(), s2().p_set, req).ok());
  req.gamma = 0.9 * g;
  CHECK(synth_h2(dm2(), s2().p_set, req).status == SolveStatus::Infeasible);
}

TEST_CASE("l2 synthesis below the achievable level is infeasible") {
  SynthesisRequest req;
  req.mode = Mode::L2;
  req.weights = unit_weights(2);
  const SynthesisResult opt = synth_l2(dm1(), s1().p_set, req);
  REQUIRE(opt.ok());
  const double g = *opt.cert.gamma;
  const GridSpec grid = GridSpec::with_total(s1().p_set, 250);
  CHECK(grid_hinf_norm(s1(), opt.ctrl, *req.weights, grid).value <= g * (1.0 + 1e-3));
  req.gamma = 0.5 * g;
  CHECK(synth_l2(dm1(), s1().p_set, req).status == SolveStatus::Infeasible);
}

TEST_CASE("noise level from alpha") {
  CHECK(eps_from_alpha(0.0) == 0.0);
  CHECK(eps_from_alpha(0.0160) == doctest::Approx(6.312e-5).epsilon(1e-2));
  CHECK(eps_from_alpha(2.0) == doctest::Approx(0.5));
}

TEST_CASE("noisy synthesis yields a positive alpha") {
  const NoisyDictionary nd = add_noise(excite(s2(), 25, 3), 0.1, kNoiseSeedOffset + 3);
  SynthesisRequest req;
  req.mode = Mode::Noisy;
  req.eps_claim = epsilon_bound(s2(), nd);
  const SynthesisResult r = synth_noisy_stabilizing(build_noisy_matrices(nd), s2().p_set, req);
  REQUIRE(r.ok());
  CHECK(*r.cert.alpha > 0.0);
  CHECK(*r.cert.eps_opt == doctest::Approx(eps_from_alpha(*r.cert.alpha)));
  CHECK(r.guaranteed.has_value());
  CHECK(*r.guaranteed == (*r.cert.eps_opt > *req.eps_claim));
}

TEST_CASE("report JSON carries the documented fields") {
  SynthesisRequest req;
  const SynthesisResult r = synth_stabilizing(dm1(), s1().p_set, req);
  const nlohmann::json j = to_json(r);
  for (const char* key : {"mode", "status", "gamma", "alpha", "eps_opt", "K", "P", "residuals",
                          "self_check", "solver"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["solver"]["margin"].get<double>() == req.solver.margin);
}
