#include <cmath>

#include <gtest/gtest.h>

#include "nclbf/controller.hpp"
#include "nclbf/scenario_io.hpp"
#include "nclbf/systems.hpp"

using namespace nclbf;

namespace {

StateVector v2(double a, double b) {
  StateVector v(2);
  v << a, b;
  return v;
}

Gradient row(double a, double b) {
  Gradient g(2);
  g << a, b;
  return g;
}

Controller linear() { return Controller(fixture_linear2d_single(), builtin_linear2d()); }

}  // namespace

TEST(Systems, LinearDynamics) {
  const auto s = builtin_linear2d();
  EXPECT_EQ(s.n, 2u);
  EXPECT_EQ(s.m, 2u);
  EXPECT_EQ(s.f(v2(1, -2)), v2(-1, 2));
  EXPECT_EQ(s.g(v2(3, 4)), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(s.dynamics(v2(1, 1), v2(1, 1)), v2(0, 0));
}

TEST(Systems, MechanicalDynamics) {
  const auto s = builtin_nonlinear_mech();
  EXPECT_EQ(s.n, 2u);
  EXPECT_EQ(s.m, 1u);
  const auto f = s.f(v2(0, 1));
  EXPECT_EQ(f(0), 1.0);
  EXPECT_NEAR(f(1), -1.0 - (0.8 + 0.2 * std::exp(-100.0)) * std::tanh(10.0), 1e-15);
  EXPECT_NEAR(f(1), -1.8, 1e-6);
  EXPECT_EQ(s.f(v2(0, 0)).norm(), 0.0);
  const auto g = s.g(v2(1, 1));
  EXPECT_EQ(g.rows(), 2);
  EXPECT_EQ(g.cols(), 1);
  EXPECT_EQ(g(0, 0), 0.0);
  EXPECT_EQ(g(1, 0), 1.0);
  EXPECT_THROW(system_by_id("pendulum"), SchemaError);
}

TEST(Normalizers, Mu) {
  const auto a = mu(row(2, 0));
  EXPECT_EQ(a(0), 0.5);
  EXPECT_EQ(a(1), 0.0);
  const auto b = mu(row(0, -21.6));
  EXPECT_NEAR(b(1), -1.0 / 21.6, 1e-15);
  EXPECT_NEAR(b(1), -0.046296, 1e-6);
  EXPECT_THROW(mu(row(0, 0)), DomainError);
}

TEST(Normalizers, MuBar) {
  const auto a = mu_bar(row(0, -21.6), 1e-9);
  EXPECT_EQ(a.value(0), 0.0);
  EXPECT_NEAR(a.value(1), -0.046296, 1e-6);
  EXPECT_FALSE(a.active[0]);
  EXPECT_TRUE(a.active[1]);
  const auto b = mu_bar(row(4, 2), 1e-9);
  EXPECT_EQ(b.value(0), 0.25);
  EXPECT_EQ(b.value(1), 0.5);
  EXPECT_TRUE(b.active[0] && b.active[1]);
  const auto c = mu_bar(row(1e-12, 1), 1e-9);
  EXPECT_EQ(c.value(0), 0.0);
  EXPECT_EQ(c.value(1), 1.0);
}

TEST(Kappa1, WorkedPoint) {
  const auto ctrl = linear();
  const StateVector x = v2(2, 3.2);
  const auto u = ctrl.kappa1(0, x);
  // B_f = 69.12, B_g = (0, -21.6): u2 = 69.12/21.6 + 20 * 14.24 / 21.6.
  EXPECT_NEAR(u(0), 0.0, 1e-12);
  EXPECT_NEAR(u(1), 69.12 / 21.6 + 20.0 * 14.24 / 21.6, 1e-12);
  EXPECT_NEAR(u(1), 16.385, 1e-3);
  const Gradient gb = ctrl.barrier().grad_B(0, x);
  const double d = gb.dot(x * -1.0 + u);
  EXPECT_NEAR(d, -20.0 * 14.24, 1e-9);
  EXPECT_NEAR(d, -284.8, 1e-9);
}

TEST(Kappa1, VanishingGradientGivesZero) {
  const auto ctrl = linear();
  EXPECT_EQ(ctrl.kappa1(0, v2(2, 2)).norm(), 0.0);
}

TEST(Kappa2, WorkedPoint) {
  const auto ctrl = linear();
  const auto u = ctrl.kappa2(v2(1, 0));
  const double oracle = -(-2.0 + std::sqrt(4.0 + 0.1 * 16.0)) / 2.0;
  EXPECT_NEAR(u(0), oracle, 1e-14);
  EXPECT_NEAR(u(0), -0.18322, 1e-5);
  EXPECT_EQ(u(1), 0.0);
  const double d = -2.0 + 2.0 * u(0);
  EXPECT_NEAR(d, -std::sqrt(5.6), 1e-12);
  EXPECT_NEAR(d, -2.3664, 1e-4);
  EXPECT_EQ(ctrl.kappa2(v2(0, 0)).norm(), 0.0);
}

TEST(Kappa3, MemoryDispatch) {
  const auto ctrl = linear();
  const StateVector x = ctrl.barrier().contact_points_2d(0)[0];
  EXPECT_EQ(ctrl.kappa3(0, x, {RegionLabel::r2()}), ctrl.kappa2(x));
  EXPECT_EQ(ctrl.kappa3(0, x, {RegionLabel::r1(0)}), ctrl.kappa1(0, x));
  EXPECT_EQ(ctrl.kappa3(0, x, {RegionLabel::r3(0)}), ctrl.kappa2(x));
  EXPECT_THROW(ctrl.kappa3(0, x, {RegionLabel::unsafe(0)}), InternalStateError);
}

TEST(Control, LawSelection) {
  const auto ctrl = linear();
  const RegionMemory mem{RegionLabel::r2()};
  EXPECT_EQ(to_code(ctrl.control(v2(5, 5), mem, 1e-3).law), "K2");
  EXPECT_EQ(to_code(ctrl.control(v2(2, 3.5), mem, 1e-3).law), "K1:1");
  const StateVector x = ctrl.barrier().contact_points_2d(0)[1];
  EXPECT_EQ(to_code(ctrl.control(x, {RegionLabel::r1(0)}, 1e-3).law), "K3:1>K1");
  EXPECT_EQ(to_code(ctrl.control(x, mem, 1e-3).law), "K3:1>K2");
  EXPECT_THROW(ctrl.control(v2(2, 2), mem, 1e-3), SafetyViolationError);
  EXPECT_THROW(ctrl.control(v2(2, 3.2), mem, 1e-3), SafetyViolationError);

  const Controller mech(fixture_nonlinear_mech_three(), builtin_nonlinear_mech());
  const auto d = mech.control(v2(-5, 0), mem, 1e-3);
  EXPECT_EQ(to_code(d.law), "K2");
  EXPECT_EQ(d.region, RegionLabel::r2());
}

TEST(Control, LawCodesRoundTrip) {
  for (const auto& t : {LawTag::k1(1), LawTag::k2(), LawTag::k3_k1(0), LawTag::k3_k2(2), LawTag::none()}) {
    const auto back = law_from_code(to_code(t));
    EXPECT_EQ(to_code(back), to_code(t));
  }
  EXPECT_THROW(law_from_code("K7"), ParseError);
}
