#pragma once

#include "ryam/grid.hpp"

#include <cstdint>

namespace ryam {

// Quintic smoothstep 6y^5 - 15y^4 + 10y^3 clamped to [0, 1].
double smoothstep5(double y);

// (g - 2rA) + dr^2 on a TorusBlock with flat g and A = diag(a, -a, 0, ...): a collar
// metric with traceless second fundamental form at the low face.
MetricField traceless_collar_block(const ChartPtr& chart, double a);

// dr^2 + e^{2kr} dx^2 + e^{-2kr} dy^2 on a 3-dimensional TorusBlock. Scalar curvature
// -2k^2, minimal (H = 0) boundary at both faces, A = diag(k, -k) up to sign.
MetricField sol_block(const ChartPtr& chart, double k);

// Round S^2 x [0, plateau] capped smoothly by a hemisphere, scaled by
// (1 + f q(r))^4 with q = r^2/2 on the plateau. Near the face this is exactly
// (1 + r^2 f/2)^4 (g_{S^2} + dr^2). Needs a 3-dimensional SphereCap chart whose
// cap angle equals torpedo_length(plateau, ramp).
MetricField torpedo_cap(const ChartPtr& chart, double plateau, double ramp, double f);
double torpedo_length(double plateau, double ramp);

// Smooth seeded perturbations on a TorusBlock: every component is a sum of three
// products of low cosine modes (periodic on the torus axes, cos(k pi r / L) along the
// collar). Draws use mt19937_64 with an explicit bit-to-double map, so a seed gives the
// same field on every platform.
// g = I + amplitude * P with |P_ij| <= 1; needs amplitude * dim < 1.
MetricField random_metric(const ChartPtr& chart, std::uint64_t seed, double amplitude);
// u = 1 + amplitude * p with |p| <= 1; needs amplitude < 1.
ScalarField random_conformal_factor(const ChartPtr& chart, std::uint64_t seed, double amplitude);

}  // namespace ryam
