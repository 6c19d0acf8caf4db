#include "curvnet/fields.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace curvnet {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) {
  theta = std::fmod(theta, kTwoPi);
  return theta < 0.0 ? theta + kTwoPi : theta;
}

}  // namespace

double eval_circle(const CircleSpec& spec, const Point2& p) {
  spec.validate();
  const double dx = p.x - spec.center.x;
  const double dy = p.y - spec.center.y;
  if (spec.form == CircleSpec::Form::kSignedDistance)
    return std::sqrt(dx * dx + dy * dy) - spec.radius;
  return dx * dx + dy * dy - spec.radius * spec.radius;
}

double FlowerSpec::boundary_radius(double theta) const {
  return petal_amplitude * std::cos(petal_count * theta) + base_radius;
}

double eval_flower(const FlowerSpec& spec, const Point2& p) {
  spec.validate();
  if (p.x == 0.0 && p.y == 0.0)
    throw ValidationError("eval_flower: polar angle undefined at the origin");
  const double r = std::hypot(p.x, p.y);
  const double theta = wrap_angle(std::atan2(p.y, p.x));
  return r - spec.boundary_radius(theta);
}

double flower_curvature(const FlowerSpec& spec, double theta) {
  spec.validate();
  const double a = spec.petal_amplitude;
  const double p = static_cast<double>(spec.petal_count);
  const double r = spec.boundary_radius(theta);
  const double rp = -a * p * std::sin(p * theta);
  const double rpp = -a * p * p * std::cos(p * theta);
  const double g = r * r + rp * rp;
  return (g + rp * rp - r * rpp) / (g * std::sqrt(g));
}

Point2 flower_point(const FlowerSpec& spec, double theta) {
  const double r = spec.boundary_radius(theta);
  return {r * std::cos(theta), r * std::sin(theta)};
}

namespace {

// Derivatives of the squared distance D(theta) = |gamma(theta) - p|^2.
struct DistDerivs {
  double d1;
  double d2;
};

DistDerivs dist_derivs(const FlowerSpec& spec, const Point2& p, double theta) {
  const double a = spec.petal_amplitude;
  const double pc = static_cast<double>(spec.petal_count);
  const double c = std::cos(theta), s = std::sin(theta);
  const double r = spec.boundary_radius(theta);
  const double rp = -a * pc * std::sin(pc * theta);
  const double rpp = -a * pc * pc * std::cos(pc * theta);
  const double gx = r * c, gy = r * s;
  const double gxp = rp * c - r * s, gyp = rp * s + r * c;
  const double gxpp = rpp * c - 2.0 * rp * s - r * c;
  const double gypp = rpp * s + 2.0 * rp * c - r * s;
  const double ex = gx - p.x, ey = gy - p.y;
  return {2.0 * (ex * gxp + ey * gyp),
          2.0 * (gxp * gxp + gyp * gyp + ex * gxpp + ey * gypp)};
}

double squared_distance(const FlowerSpec& spec, const Point2& p, double theta) {
  const Point2 g = flower_point(spec, theta);
  const double dx = g.x - p.x, dy = g.y - p.y;
  return dx * dx + dy * dy;
}

}  // namespace

CurvatureOracleResult flower_closest_point(const FlowerSpec& spec, const Point2& p) {
  spec.validate();
  if (p.norm() > 10.0 * spec.base_radius)
    throw ValidationError("flower_closest_point: query point too far from the interface");

  constexpr int kScanSamples = 4096;
  const double step = kTwoPi / kScanSamples;
  int best = 0;
  double best_d2 = squared_distance(spec, p, 0.0);
  for (int k = 1; k < kScanSamples; ++k) {
    const double d2 = squared_distance(spec, p, k * step);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = k;
    }
  }

  // The minimum lies in the bracket around the best scan sample; refine the
  // stationarity condition D'(theta) = 0 with Newton, falling back to
  // bisection whenever a step leaves the bracket or stalls.
  double lo = (best - 1) * step;
  double hi = (best + 1) * step;
  double theta = best * step;
  bool converged = false;
  for (int it = 0; it < 50; ++it) {
    const auto [d1, d2] = dist_derivs(spec, p, theta);
    if (d1 > 0.0)
      hi = theta;
    else
      lo = theta;
    double next = theta - d1 / d2;
    if (!(d2 > 0.0) || next < lo || next > hi) next = 0.5 * (lo + hi);
    const double dtheta = next - theta;
    theta = next;
    if (std::abs(dtheta) < 1e-13) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (dist_derivs(spec, p, mid).d1 > 0.0)
        hi = mid;
      else
        lo = mid;
    }
    theta = 0.5 * (lo + hi);
    if (hi - lo > 1e-12)
      throw NumericalError("flower_closest_point: no convergence at (" +
                           std::to_string(p.x) + ", " + std::to_string(p.y) +
                           "), bracket width " + std::to_string(hi - lo));
  }

  CurvatureOracleResult result;
  result.theta_star = wrap_angle(theta);
  result.closest_point = flower_point(spec, result.theta_star);
  return result;
}

double flower_target_hkappa(const FlowerSpec& spec, const Point2& p, double h) {
  const CurvatureOracleResult cp = flower_closest_point(spec, p);
  return h * flower_curvature(spec, cp.theta_star);
}

}  // namespace curvnet
