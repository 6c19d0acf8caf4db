#pragma once

#include "curvnet/geometry.hpp"

namespace curvnet {

/// Circular interface of radius r about (x0, y0). The signed-distance form is
/// sqrt((x-x0)^2 + (y-y0)^2) - r; the quadratic form is
/// (x-x0)^2 + (y-y0)^2 - r^2. Both are negative inside.
struct CircleSpec {
  enum class Form { kSignedDistance, kQuadratic };

  Point2 center;
  double radius = 0.0;
  Form form = Form::kSignedDistance;

  void validate() const {
    if (radius <= 0.0) throw ValidationError("CircleSpec: radius must be positive");
  }
};

double eval_circle(const CircleSpec& spec, const Point2& p);

/// p-petaled polar interface r(theta) = a*cos(p*theta) + b, embedded as the
/// zero set of phi(x,y) = sqrt(x^2+y^2) - a*cos(p*theta) - b. Negative inside;
/// not a signed distance function unless a = 0.
struct FlowerSpec {
  double petal_amplitude = 0.0;  // a
  double base_radius = 0.0;      // b
  int petal_count = 0;           // p

  void validate() const {
    if (petal_amplitude < 0.0 || base_radius <= petal_amplitude)
      throw ValidationError("FlowerSpec: need b > a >= 0 so r(theta) stays positive");
    if (petal_count < 1) throw ValidationError("FlowerSpec: petal count must be >= 1");
  }

  double boundary_radius(double theta) const;  // r(theta) on the interface
};

double eval_flower(const FlowerSpec& spec, const Point2& p);

/// Analytic curvature of the flower interface at polar angle theta.
double flower_curvature(const FlowerSpec& spec, double theta);

/// Point on the flower interface at polar angle theta.
Point2 flower_point(const FlowerSpec& spec, double theta);

struct CurvatureOracleResult {
  double theta_star = 0.0;   // angle of the closest interface point, in [0, 2pi)
  Point2 closest_point;
  double hkappa = 0.0;       // filled by the caller once h is known
};

/// Normal projection of p onto the flower interface: dense scan over 4096
/// angles followed by safeguarded Newton refinement of the squared-distance
/// stationarity condition (|dtheta| < 1e-13 or 50 iterations, bisection
/// fallback).
CurvatureOracleResult flower_closest_point(const FlowerSpec& spec, const Point2& p);

/// Dimensionless curvature h*kappa at the interface point closest to p.
double flower_target_hkappa(const FlowerSpec& spec, const Point2& p, double h);

}  // namespace curvnet
