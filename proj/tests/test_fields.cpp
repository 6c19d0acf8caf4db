#include <doctest.h>

#include <cmath>
#include <numbers>

#include "curvnet/fields.hpp"
#include "curvnet/random.hpp"

using namespace curvnet;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("circle field values") {
  const CircleSpec sdf{{0.5, 0.5}, 0.25, CircleSpec::Form::kSignedDistance};
  const CircleSpec quad{{0.5, 0.5}, 0.25, CircleSpec::Form::kQuadratic};
  CHECK(eval_circle(sdf, {0.5, 0.75}) == 0.0);
  CHECK(eval_circle(quad, {0.5, 0.75}) == 0.0);
  CHECK(eval_circle(sdf, {0.5, 0.5}) == doctest::Approx(-0.25));
  CHECK_THROWS_AS(eval_circle(CircleSpec{{0, 0}, -1.0, {}}, {0, 0}), ValidationError);
}

TEST_CASE("signed-distance circle has unit gradient away from the center") {
  const CircleSpec sdf{{0.5, 0.5}, 0.25, CircleSpec::Form::kSignedDistance};
  Rng rng(11);
  const double eps = 1e-6;
  for (int k = 0; k < 200; ++k) {
    const Point2 p{uniform_in(rng, 0.0, 1.0), uniform_in(rng, 0.0, 1.0)};
    if (distance(p, {0.5, 0.5}) < 0.05) continue;
    const double gx =
        (eval_circle(sdf, {p.x + eps, p.y}) - eval_circle(sdf, {p.x - eps, p.y})) / (2 * eps);
    const double gy =
        (eval_circle(sdf, {p.x, p.y + eps}) - eval_circle(sdf, {p.x, p.y - eps})) / (2 * eps);
    CHECK(std::hypot(gx, gy) == doctest::Approx(1.0).epsilon(1e-4));
  }
}

TEST_CASE("flower field values") {
  const FlowerSpec circle_like{0.0, 0.15, 3};
  CHECK(eval_flower(circle_like, {0.15, 0.0}) == 0.0);

  const FlowerSpec smooth{0.05, 0.15, 3};
  CHECK(eval_flower(smooth, {0.20, 0.0}) == 0.0);
  CHECK(eval_flower(smooth, {0.10, 0.0}) == doctest::Approx(-0.10));
  CHECK_THROWS_AS(eval_flower(smooth, {0.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(eval_flower(FlowerSpec{0.2, 0.15, 3}, {0.1, 0.0}), ValidationError);
}

TEST_CASE("flower zero set with a = 0 matches the circle of radius b") {
  const FlowerSpec flower{0.0, 0.15, 3};
  const CircleSpec circle{{0.0, 0.0}, 0.15, CircleSpec::Form::kSignedDistance};
  for (int k = 0; k < 1000; ++k) {
    const double theta = 2.0 * kPi * k / 1000.0;
    const Point2 p{0.15 * std::cos(theta), 0.15 * std::sin(theta)};
    CHECK(std::abs(eval_flower(flower, p)) < 1e-15);
    CHECK(std::abs(eval_circle(circle, p)) < 1e-15);
  }
}

TEST_CASE("flower curvature") {
  SUBCASE("degenerates to 1/b for a circle") {
    const FlowerSpec flower{0.0, 0.15, 3};
    CHECK(flower_curvature(flower, 0.3) == doctest::Approx(1.0 / 0.15));
  }
  SUBCASE("hand-evaluated value at the petal tip") {
    // r = 0.2, r' = 0, r'' = -0.45 => (0.04 + 0.09) / 0.04^1.5 = 16.25.
    const FlowerSpec smooth{0.05, 0.15, 3};
    CHECK(flower_curvature(smooth, 0.0) == doctest::Approx(16.25).epsilon(1e-12));
  }
  SUBCASE("periodic with the petal count") {
    const FlowerSpec smooth{0.05, 0.15, 3};
    for (double theta : {0.0, 0.41, 1.7, 3.9}) {
      const double shifted = theta + 2.0 * kPi / 3.0;
      CHECK(std::abs(flower_curvature(smooth, theta) - flower_curvature(smooth, shifted)) <
            1e-12);
    }
  }
}

TEST_CASE("closest point on a circle-like flower is the radial projection") {
  const FlowerSpec flower{0.0, 0.15, 3};
  const auto result = flower_closest_point(flower, {0.3, 0.0});
  CHECK(result.theta_star == 0.0);
  CHECK(result.closest_point.x == doctest::Approx(0.15));
  CHECK(std::abs(result.closest_point.y) < 1e-12);
}

TEST_CASE("closest point respects the symmetry axis") {
  const FlowerSpec smooth{0.05, 0.15, 3};
  const auto result = flower_closest_point(smooth, {0.25, 0.0});
  const double wrapped = std::min(result.theta_star, 2.0 * kPi - result.theta_star);
  CHECK(wrapped < 1e-10);
  CHECK(result.closest_point.x == doctest::Approx(0.20));
}

TEST_CASE("closest point dominates dense curve sampling") {
  const FlowerSpec acute{0.075, 0.15, 3};
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const double theta = uniform_in(rng, 0.0, 2.0 * kPi);
    const Point2 on_curve = flower_point(acute, theta);
    const Point2 p{on_curve.x + uniform_in(rng, -0.02, 0.02),
                   on_curve.y + uniform_in(rng, -0.02, 0.02)};
    const auto result = flower_closest_point(acute, p);
    const double best = distance(p, result.closest_point);
    for (int k = 0; k < 100000; ++k) {
      const Point2 q = flower_point(acute, 2.0 * kPi * k / 100000.0);
      CHECK(best <= distance(p, q) + 1e-12);
    }
  }
}

TEST_CASE("closest point is a projection on the interface itself") {
  const FlowerSpec smooth{0.05, 0.15, 3};
  for (int k = 0; k < 64; ++k) {
    const double theta = 2.0 * kPi * k / 64.0;
    const Point2 p = flower_point(smooth, theta);
    const auto result = flower_closest_point(smooth, p);
    CHECK(distance(result.closest_point, p) < 1e-10);
  }
}

TEST_CASE("oracle result lies on the interface and rejects far queries") {
  const FlowerSpec smooth{0.05, 0.15, 3};
  const auto result = flower_closest_point(smooth, {0.21, 0.04});
  const double r_at = smooth.boundary_radius(result.theta_star);
  CHECK(result.closest_point.norm() == doctest::Approx(r_at).epsilon(1e-12));
  CHECK_THROWS_AS(flower_closest_point(smooth, {5.0, 0.0}), ValidationError);
}

TEST_CASE("target hkappa scales the oracle curvature") {
  const FlowerSpec smooth{0.05, 0.15, 3};
  const double h = 1.0 / 255.0;
  CHECK(flower_target_hkappa(smooth, {0.25, 0.0}, h) == doctest::Approx(16.25 * h));
}
