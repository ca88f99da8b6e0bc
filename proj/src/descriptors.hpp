#pragma once

// Config descriptors shared by the experiment runners. Private to the experiments
// library.

#include "ryam/experiments.hpp"
#include "ryam/grid.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace ryam::detail {

using Json = nlohmann::json;

// Typed access with ConfigError messages that name the key.
double number_at(const Json& obj, const char* key, double fallback);
double required_number(const Json& obj, const char* key);
int integer_at(const Json& obj, const char* key, int fallback);
std::uint64_t seed_at(const Json& obj, const char* key, std::uint64_t fallback);
std::vector<double> numbers_at(const Json& obj, const char* key);
const Json& object_at(const Json& obj, const char* key);

// {"kind": "torus-block" | "sphere-cap" | "cylinder", "dim", "resolution": [...],
//  "periods", "length", "cap_angle"}. `refine` scales every axis (collar intervals on
// TorusBlock and Cylinder, node counts elsewhere); the result must be an integer.
ChartSpec chart_spec(const Json& manifold, double refine = 1.0);
std::string chart_kind_name(ChartKind k);

// Metric descriptors: flat, round-cap, standard, collar {a}, conformal {base, u},
// constant-R {scalar}, random {amplitude[, seed]}, torpedo {plateau, ramp, f}.
MetricField metric_from(const Json& desc, const ChartPtr& chart, std::uint64_t seed);

// u-expression: {"constant": c, "terms": [{"coeff": a, "factors": [factor...]}]} with
// factor {"axis": k, "fn": "cos" | "sin", "freq": w, "phase": p, "var": "x" | "psi"} or
// {"axis": k, "fn": "poly", "coeffs": [c0, c1, ...], "var": ...}. On a periodic axis the
// frequency must be a multiple of 2 pi / period. "psi" is the polar distance cap_angle - x
// on the collar axis of a SphereCap.
ScalarField scalar_from(const Json& expr, const ChartPtr& chart);

// {"face": [axis, side]}, default the chart's first face.
Face face_from(const Json& cfg, const GridChart& chart);

// Radius of the torpedo plateau when `desc` is a torpedo metric, otherwise -1.
double torpedo_plateau(const Json& desc);
// f of a torpedo descriptor.
double torpedo_f(const Json& desc);
// The cap angle a torpedo descriptor needs.
double torpedo_cap_angle(const Json& desc);

}  // namespace ryam::detail
