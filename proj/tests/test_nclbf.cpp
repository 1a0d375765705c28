#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "nclbf/barrier.hpp"
#include "nclbf/scenario_io.hpp"

using namespace nclbf;

namespace {

StateVector v2(double a, double b) {
  StateVector v(2);
  v << a, b;
  return v;
}

LyapunovBarrier single() { return LyapunovBarrier(fixture_linear2d_single()); }
LyapunovBarrier three() { return LyapunovBarrier(fixture_nonlinear_mech_three()); }

}  // namespace

TEST(Certificate, LyapunovPart) {
  EXPECT_EQ(LyapunovBarrier::L(v2(0, 0)), 0.0);
  EXPECT_EQ(LyapunovBarrier::grad_L(v2(0, 0)).norm(), 0.0);
  EXPECT_NEAR(LyapunovBarrier::L(v2(2, 3.2)), 14.24, 1e-12);
  EXPECT_NEAR(LyapunovBarrier::grad_L(v2(2, 3.2))(0), 4.0, 1e-12);
  EXPECT_NEAR(LyapunovBarrier::grad_L(v2(2, 3.2))(1), 6.4, 1e-12);
  EXPECT_EQ(LyapunovBarrier::L(v2(5, 5)), 50.0);
}

TEST(Certificate, BarrierPart) {
  const auto b = single();
  EXPECT_EQ(b.B(0, v2(2, 2)), 36.9);
  EXPECT_NEAR(b.B(0, v2(2, 3.2)), 36.9 - 9 * 1.44, 1e-12);
  EXPECT_NEAR(b.B(0, v2(0, 0)), -35.1, 1e-12);
  const Gradient g = b.grad_B(0, v2(2, 3.2));
  EXPECT_NEAR(g(0), 0.0, 1e-12);
  EXPECT_NEAR(g(1), -21.6, 1e-12);
}

TEST(Certificate, CompositeValue) {
  const auto b = single();
  EXPECT_EQ(b.V(v2(0, 0)), 0.0);
  EXPECT_NEAR(b.V(v2(2, 3.2)), 23.94, 1e-12);
  EXPECT_EQ(b.V(v2(5, 5)), 50.0);
}

TEST(Certificate, Regions) {
  const auto b = single();
  EXPECT_EQ(b.classify(v2(0, 0), 1e-3), RegionLabel::r2());
  // |(2,3.2) - (2,2)| = 1.2 < sqrt 2: inside the obstacle although B - L = 9.7.
  EXPECT_EQ(b.classify(v2(2, 3.2), 1e-3), RegionLabel::unsafe(0));
  EXPECT_NEAR(b.B(0, v2(2, 3.2)) - LyapunovBarrier::L(v2(2, 3.2)), 9.7, 1e-12);
  EXPECT_EQ(b.classify(v2(2, 3.5), 1e-3), RegionLabel::r1(0));
  EXPECT_EQ(b.classify(v2(2, 2), 1e-3), RegionLabel::unsafe(0));
  const double r = std::sqrt(2.97);
  for (double a : {0.1, 1.0, 2.5, 4.0}) {
    const StateVector x = v2(1.8 + r * std::cos(a), 1.8 + r * std::sin(a));
    if (b.inside_obstacle(0, x)) continue;
    EXPECT_EQ(b.classify(x, 1e-3), RegionLabel::r3(0)) << a;
  }
}

TEST(Certificate, RegionCodes) {
  for (const auto& r : {RegionLabel::r1(2), RegionLabel::r2(), RegionLabel::r3(0), RegionLabel::unsafe(1)}) {
    EXPECT_EQ(region_from_code(to_code(r)), r);
  }
  EXPECT_EQ(to_code(RegionLabel::r1(0)), "R1:1");
  EXPECT_THROW(region_from_code("R9"), ParseError);
}

TEST(Geometry, BoundarySphere) {
  const auto s = single().boundary_sphere(0);
  EXPECT_NEAR(s.center(0), 1.8, 1e-12);
  EXPECT_NEAR(s.center(1), 1.8, 1e-12);
  EXPECT_NEAR(s.radius_sq, (10 * 36.9 - 9 * 8) / 100.0, 1e-12);

  const auto s3 = three().boundary_sphere(2);
  EXPECT_NEAR(s3.center(0), -36.0 / 19.0, 1e-12);
  EXPECT_NEAR(s3.center(0), -1.8947, 1e-4);
  EXPECT_EQ(s3.center(1), 0.0);
  EXPECT_NEAR(s3.radius_sq, (19 * 27.2 - 18 * 4) / 361.0, 1e-12);
  EXPECT_NEAR(s3.radius_sq, 1.2322, 1e-4);
}

TEST(Geometry, LargeEta1CentreApproachesObstacle) {
  auto cfg = fixture_linear2d_single();
  cfg.params[0].eta1 = 1e9;
  cfg.params[0].eta2 = 1e9 * 2.0 + 18.0 + 0.5;
  const auto s = LyapunovBarrier(cfg).boundary_sphere(0);
  EXPECT_NEAR(s.center(0), 2.0, 1e-8);
  EXPECT_NEAR(s.center(1), 2.0, 1e-8);
}

TEST(Geometry, BufferWidthAndPhi) {
  const auto b = single();
  EXPECT_NEAR(b.buffer_width(0), std::sqrt(0.9 / 10.0), 1e-12);
  EXPECT_NEAR(b.buffer_width(0), 0.3, 1e-12);
  EXPECT_NEAR(b.phi(0), (9 * 8 - 36.9) / 10.0, 1e-12);
  EXPECT_NEAR(b.phi(0), 3.50, 0.02);
  EXPECT_NEAR(three().phi(1), 6.465, 1e-12);

  auto cfg = fixture_linear2d_single();
  cfg.params[0].w = 1e-12;
  cfg.params[0].eta2 = derive_eta2(9.0, cfg.obstacles[0], 1e-12);
  EXPECT_LT(LyapunovBarrier(cfg).buffer_width(0), 1e-6);
  cfg.params[0].w.reset();
  cfg.params[0].eta2 = 72.0 - 1e-9;
  EXPECT_GT(LyapunovBarrier(cfg).phi(0), 0.0);
  EXPECT_LT(LyapunovBarrier(cfg).phi(0), 1e-9);
}

TEST(Geometry, ContactPoints) {
  const auto b = single();
  const auto pts = b.contact_points_2d(0);
  // Origin tangents to a circle: distance sqrt(|C|^2 - R^2) from the
  // origin, at angle asin(R/|C|) either side of the centre direction.
  const double c = std::sqrt(2 * 1.8 * 1.8), r = std::sqrt(2.97);
  const double d = std::sqrt(c * c - r * r), a = std::asin(r / c), base = std::atan2(1.8, 1.8);
  const StateVector lo = v2(d * std::cos(base - a), d * std::sin(base - a));
  const StateVector hi = v2(d * std::cos(base + a), d * std::sin(base + a));
  EXPECT_NEAR((pts[0] - lo).norm(), 0.0, 1e-12);
  EXPECT_NEAR((pts[1] - hi).norm(), 0.0, 1e-12);
  EXPECT_NEAR(pts[0](0), 1.87, 0.02);
  EXPECT_NEAR(pts[0](1), 0.08, 0.02);
  EXPECT_NEAR(pts[1](0), 0.08, 0.02);
  EXPECT_NEAR(pts[1](1), 1.87, 0.02);
  for (const auto& p : pts) {
    EXPECT_NEAR(p.squaredNorm(), b.phi(0), 1e-12);
    EXPECT_TRUE(b.on_contact_set(p, 0, 1e-12));
  }
}

TEST(Geometry, ShrunkBand) {
  const auto b = single();
  // Sphere point with |x|^2 = 1: x.c = (1 + |c|^2 - rbar)/2 with c = (1.8, 1.8).
  const double s = (1.0 + 6.48 - 2.97) / 2.0 / 1.8;
  const double x1 = (s + std::sqrt(2.0 - s * s)) / 2.0;
  const StateVector x = v2(x1, s - x1);
  EXPECT_NEAR(x.squaredNorm(), 1.0, 1e-12);
  EXPECT_TRUE(b.in_shrunk_band(x, 0, 1e-3));
  EXPECT_FALSE(b.in_shrunk_band(b.contact_points_2d(0)[0], 0, 1e-3));
  EXPECT_FALSE(b.in_shrunk_band(v2(5, 5), 0, 1e-3));
}

TEST(CertificateProperty, CompositeDominatesParts) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5);
  const auto b = three();
  for (int k = 0; k < 10000; ++k) {
    const StateVector x = v2(u(rng), u(rng));
    const double v = b.V(x);
    EXPECT_GE(v, LyapunovBarrier::L(x));
    for (std::size_t i = 0; i < b.size(); ++i) EXPECT_GE(v, b.B(i, x));
    const auto r = b.classify(x, 1e-3);
    if (r.is(RegionLabel::Kind::R2)) {
      EXPECT_EQ(v, LyapunovBarrier::L(x));
    } else if (r.is(RegionLabel::Kind::R1)) {
      EXPECT_EQ(v, b.B(r.obstacle, x));
    } else if (r.is(RegionLabel::Kind::Unsafe)) {
      EXPECT_LT(b.clearance(r.obstacle, x), 0.0);
    }
  }
}

TEST(CertificateProperty, BoundarySpherePointsHaveEqualParts) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0, 2 * M_PI);
  const auto b = three();
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto s = b.boundary_sphere(i);
    for (int k = 0; k < 1000; ++k) {
      const double a = ang(rng);
      const StateVector x = s.center + std::sqrt(s.radius_sq) * v2(std::cos(a), std::sin(a));
      EXPECT_NEAR(b.B(i, x) - LyapunovBarrier::L(x), 0.0, 1e-9);
      // The sphere stays outside the obstacle.
      EXPECT_GE(b.clearance(i, x), -1e-12);
    }
  }
}
