#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "nclbf/scenario.hpp"
#include "nclbf/scenario_io.hpp"

using namespace nclbf;

namespace {

StateVector v2(double a, double b) {
  StateVector v(2);
  v << a, b;
  return v;
}

const char* kLinearJson = R"({
  "system": "linear2d",
  "state_box": [[-5, 5], [-5, 5]],
  "obstacles": [{"center": [2, 2], "radius_sq": 2}],
  "params": [{"eta1": 9, "w": 0.9, "c1": [10, 20]}],
  "gamma": 0.1,
  "initial_states": [[5, 5], [3, 5]]
})";

}  // namespace

TEST(DeriveEta2, SingleObstacleValueIsExact) {
  const auto o = ObstacleSpec::from_radius_sq(v2(2, 2), 2.0);
  EXPECT_EQ(derive_eta2(9.0, o, 0.9), 36.9);
}

TEST(DeriveEta2, ThreeObstacleFirstBall) {
  const auto o = ObstacleSpec::from_radius_sq(v2(2, 0), 0.7);
  const double oracle = 11.0 * 0.7 + std::pow(2.0 + std::sqrt(0.7), 2) + 0.3;
  EXPECT_NEAR(derive_eta2(11.0, o, 0.3), oracle, 1e-12);
  EXPECT_NEAR(derive_eta2(11.0, o, 0.3), 16.0467, 1e-4);
}

TEST(DeriveEta2, ZeroBufferLimit) {
  const auto o = ObstacleSpec::from_radius_sq(v2(2, 2), 2.0);
  EXPECT_NEAR(derive_eta2(9.0, o, 1e-14), 36.0, 1e-12);
}

TEST(DeriveEta2, RejectsBadArguments) {
  const auto o = ObstacleSpec::from_radius_sq(v2(2, 2), 2.0);
  EXPECT_THROW(derive_eta2(2.9, o, 0.9), ParameterError);
  EXPECT_THROW(derive_eta2(9.0, o, 0.0), ParameterError);
  EXPECT_THROW(derive_eta2(9.0, o, 1e3), ParameterError);
  const auto bad = ObstacleSpec::from_radius_sq(v2(0.5, 0), 1.0);
  EXPECT_THROW(derive_eta2(9.0, bad, 0.1), ParameterError);
}

TEST(ValidateParams, SingleObstacleFixturePasses) {
  const auto rep = validate_params(fixture_linear2d_single());
  EXPECT_TRUE(rep.pass());
  const auto* e = rep.find("eta1_lower", 0);
  ASSERT_NE(e, nullptr);
  // Bound (|x_c|+sqrt r)/(|x_c|-sqrt r) = (2 sqrt2 + sqrt2)/(2 sqrt2 - sqrt2) = 3.
  EXPECT_NEAR(e->slack, 6.0, 1e-12);
}

TEST(ValidateParams, ThreeObstacleFixturePasses) {
  const auto rep = validate_params(fixture_nonlinear_mech_three());
  EXPECT_TRUE(rep.pass()) << ::testing::PrintToString(rep.failures());
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_NE(rep.find("implied_w", i), nullptr);
    EXPECT_TRUE(rep.find("implied_w", i)->informational);
  }
}

TEST(ValidateParams, UpperBoundIsStrict) {
  auto cfg = fixture_linear2d_single();
  cfg.params[0].eta2 = cfg.params[0].eta1 * cfg.obstacles[0].center_norm_sq();
  cfg.params[0].w.reset();
  const auto rep = validate_params(cfg);
  EXPECT_FALSE(rep.pass());
  ASSERT_NE(rep.find("eta2_upper", 0), nullptr);
  EXPECT_FALSE(rep.find("eta2_upper", 0)->pass);
  EXPECT_EQ(rep.find("eta2_upper", 0)->slack, 0.0);
}

TEST(ValidateParams, Eta1BoundStrictnessDependsOnObstacleCount) {
  auto single = fixture_linear2d_single();
  single.params[0].eta1 = 3.0;
  single.params[0].w.reset();
  single.params[0].eta2 = 3.0 * 2.0 + 18.0 + 0.01;
  EXPECT_TRUE(validate_params(single).find("eta1_lower", 0)->pass);

  auto multi = fixture_nonlinear_mech_three();
  const auto& o = multi.obstacles[0];
  multi.params[0].eta1 = (o.center_norm() + std::sqrt(o.radius_sq)) / (o.center_norm() - std::sqrt(o.radius_sq));
  EXPECT_FALSE(validate_params(multi).find("eta1_lower", 0)->pass);
}

TEST(ValidateParams, OverlappingObstaclesFail) {
  auto cfg = fixture_nonlinear_mech_three();
  cfg.obstacles[1].center = v2(2.0, 1.0);
  const auto rep = validate_params(cfg);
  EXPECT_FALSE(rep.find("obstacles_disjoint", 0)->pass);
}

TEST(ValidateParams, NonPositiveGainsFail) {
  auto cfg = fixture_linear2d_single();
  cfg.params[0].c1 = v2(0.0, 20.0);
  cfg.gains.gamma = 0.0;
  const auto rep = validate_params(cfg);
  EXPECT_FALSE(rep.find("c1_positive", 0)->pass);
  EXPECT_FALSE(rep.find("gamma_positive")->pass);
}

TEST(LoadScenario, ParsesAndDerivesEta2) {
  const auto cfg = load_scenario(kLinearJson);
  EXPECT_EQ(cfg.system_id, "linear2d");
  ASSERT_EQ(cfg.params.size(), 1u);
  EXPECT_EQ(cfg.params[0].eta2, 36.9);
  EXPECT_FALSE(cfg.params[0].eta2_explicit);
  EXPECT_EQ(cfg.integrator.dt, 1e-3);
  EXPECT_EQ(cfg.initial_states.size(), 2u);
}

TEST(LoadScenario, RoundTripIsExact) {
  for (const auto& name : builtin_scenario_names()) {
    const auto cfg = *builtin_scenario(name);
    const std::string text = save_scenario(cfg);
    const auto back = load_scenario(text);
    EXPECT_EQ(save_scenario(back), text) << name;
    ASSERT_EQ(back.params.size(), cfg.params.size());
    for (std::size_t i = 0; i < cfg.params.size(); ++i) {
      EXPECT_EQ(back.params[i].eta2, cfg.params[i].eta2);
      EXPECT_EQ(back.obstacles[i].radius_sq, cfg.obstacles[i].radius_sq);
    }
  }
  const std::string given = save_scenario(load_scenario(kLinearJson));
  EXPECT_EQ(save_scenario(load_scenario(given)), given);
}

TEST(LoadScenario, RadiusAsGivenSurvivesRoundTrip) {
  std::string text = kLinearJson;
  text.replace(text.find("\"radius_sq\": 2"), 14, "\"radius\": 1.4142135623730951");
  const auto cfg = load_scenario(text, {true, false, false});
  EXPECT_EQ(cfg.obstacles[0].radius(), 1.4142135623730951);
  const auto back = load_scenario(save_scenario(cfg));
  EXPECT_EQ(back.obstacles[0].radius(), 1.4142135623730951);
}

TEST(LoadScenario, Errors) {
  EXPECT_THROW(load_scenario("{not json"), ParseError);
  EXPECT_THROW(load_scenario(R"({"system": "linear2d"})"), SchemaError);
  try {
    load_scenario(R"({"system": "linear2d", "state_box": [[-5,5],[-5,5]], "obstacles": [{"center": [2,2]}]})");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("obstacles[0].radius"), std::string::npos);
  }
  EXPECT_THROW(load_scenario(R"({"system": "nope", "state_box": [[-5,5]]})"), SchemaError);

  std::string dim = kLinearJson;
  dim.replace(dim.find("[10, 20]"), 8, "[10]");
  EXPECT_THROW(load_scenario(dim), DimensionError);

  std::string origin = kLinearJson;
  origin.replace(origin.find("\"center\": [2, 2]"), 16, "\"center\": [0.5, 0]");
  try {
    load_scenario(origin);
    FAIL();
  } catch (const ParameterError& e) {
    EXPECT_NE(std::string(e.what()).find("origin inside unsafe ball"), std::string::npos);
  }

  std::string both = kLinearJson;
  both.replace(both.find("\"w\": 0.9"), 8, "\"w\": 0.9, \"eta2\": 36.8");
  EXPECT_THROW(load_scenario(both), ParameterError);
}

TEST(LoadScenario, InadmissibleInitialState) {
  std::string text = kLinearJson;
  text.replace(text.find("[3, 5]]"), 7, "[2, 3.2]]");
  EXPECT_THROW(load_scenario(text), ParameterError);
  LoadOptions opts;
  opts.allow_inadmissible_init = true;
  const auto res = load_scenario_with_warnings(text, opts);
  EXPECT_EQ(res.warnings.size(), 1u);
  EXPECT_EQ(res.config.initial_states.size(), 2u);
}

TEST(Fixtures, SingleObstacleParameters) {
  const auto cfg = fixture_linear2d_single();
  EXPECT_EQ(cfg.params[0].eta1, 9.0);
  EXPECT_EQ(*cfg.params[0].w, 0.9);
  EXPECT_EQ(cfg.params[0].eta2, 36.9);
  EXPECT_EQ(cfg.params[0].c1, v2(10, 20));
  EXPECT_EQ(cfg.gains.gamma, 0.1);
  EXPECT_EQ(cfg.initial_states.size(), 5u);
}

TEST(Fixtures, ThreeObstacleParameters) {
  const auto cfg = fixture_nonlinear_mech_three();
  ASSERT_EQ(cfg.params.size(), 3u);
  EXPECT_EQ(cfg.params[0].eta2, 16.0);
  EXPECT_EQ(cfg.params[1].eta2, 22.7);
  EXPECT_EQ(cfg.params[2].eta2, 27.2);
  EXPECT_EQ(cfg.params[1].eta1, 19.0);
  EXPECT_EQ(cfg.initial_states.size(), 8u);
  EXPECT_THROW(resolve_scenario("/nonexistent/scenario.json"), ParseError);
}
