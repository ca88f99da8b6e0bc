#include "ryam/grid.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ryam;

namespace {

const double kPi = std::numbers::pi;

ChartPtr torus(int n, int nr, double length = 1.0) {
  return build_chart({ChartKind::TorusBlock, 3, {n, n, nr}, {1.0, 1.0}, length, 0.0});
}

ChartPtr hemisphere(int scale) {
  return build_chart({ChartKind::SphereCap, 3, {2 * scale, 4 * scale, scale}, {}, 1.0, kPi / 2});
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

TEST_CASE("torus block has faces at both collar ends") {
  const ChartPtr c = torus(16, 17);
  CHECK(c->dim() == 3);
  CHECK(c->size() == 16u * 16u * 17u);
  REQUIRE(c->faces().size() == 2);
  CHECK(c->faces()[0].axis == 2);
  CHECK(c->faces()[0].side == 0);
  CHECK(c->faces()[1].side == 1);
  const Axis& r = c->axis(2);
  CHECK(r.coord(0) == 0.0);
  CHECK(r.coord(r.count - 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(c->axis(0).periodic);
  CHECK_FALSE(r.periodic);
}

TEST_CASE("hemisphere chart has the equator as its only face") {
  const ChartPtr c = hemisphere(16);
  REQUIRE(c->faces().size() == 1);
  CHECK(c->faces()[0].axis == c->collar_axis());
  CHECK(c->cap_angle() == doctest::Approx(kPi / 2));
  CHECK(c->max_step() == doctest::Approx(kPi / 32).epsilon(1e-14));
}

TEST_CASE("bad chart descriptors are rejected") {
  CHECK_THROWS_AS(torus(16, 3), PreconditionError);
  CHECK_THROWS_AS(build_chart({ChartKind::TorusBlock, 2, {16, 17}, {1.0}, 1.0, 0.0}), PreconditionError);
  CHECK_THROWS_AS(build_chart({ChartKind::SphereCap, 3, {8, 16, 8}, {}, 1.0, kPi}), PreconditionError);
  CHECK_THROWS_AS(build_chart({ChartKind::TorusBlock, 3, {8, 8}, {}, 1.0, 0.0}), PreconditionError);
}

TEST_CASE("metric construction rejects indefinite matrices") {
  const ChartPtr c = torus(4, 5);
  CHECK_THROWS_AS(make_metric(c, [](std::size_t) {
                    Mat m = Mat::Identity(3, 3);
                    m(1, 1) = -1e-3;
                    return m;
                  }),
                  PreconditionError);
  CHECK_THROWS_AS(make_metric(c, [](std::size_t) {
                    Mat m = Mat::Identity(3, 3);
                    m(0, 1) = m(1, 0) = 1.0;
                    return m;
                  }),
                  PreconditionError);
}

TEST_CASE("gradient of constant and affine fields") {
  const ChartPtr c = torus(8, 9);
  const MetricField g = standard_metric(c);
  CHECK(max_abs(gradient(ScalarField(c, 3.5), g).norm2.values) == 0.0);
  const ScalarField r = make_scalar(c, [&](std::size_t i) { return c->coord(i, 2); });
  for (double v : gradient(r, g).norm2.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
  const ScalarField aff = make_scalar(c, [&](std::size_t i) { return 2.0 - 3.0 * c->coord(i, 2); });
  for (double v : gradient(aff, g).norm2.values) CHECK(v == doctest::Approx(9.0).epsilon(1e-10));
}

TEST_CASE("gradient converges at second order") {
  double err[3];
  int k = 0;
  for (int n : {8, 16, 32}) {
    const ChartPtr c = torus(n, n + 1);
    const ScalarField u = make_scalar(c, [&](std::size_t i) { return std::sin(2 * kPi * c->coord(i, 0)); });
    const Gradient gr = gradient(u, standard_metric(c));
    double e = 0.0;
    for (std::size_t i = 0; i < c->size(); ++i) {
      const double cx = std::cos(2 * kPi * c->coord(i, 0));
      e = std::max(e, std::abs(gr.norm2[i] - 4 * kPi * kPi * cx * cx));
    }
    err[k++] = e;
  }
  for (int i = 0; i < 2; ++i) {
    const double slope = std::log2(err[i] / err[i + 1]);
    CHECK(slope > 1.7);
    CHECK(slope < 2.3);
  }
}

TEST_CASE("quadrature of one") {
  const ChartPtr c = torus(16, 17);
  const MetricField g = standard_metric(c);
  CHECK(integrate(ScalarField(c, 1.0), g) == doctest::Approx(1.0).epsilon(1e-12));
  const ChartPtr c2 = build_chart({ChartKind::TorusBlock, 3, {6, 10, 9}, {2.0, 0.5}, 3.0, 0.0});
  CHECK(integrate(ScalarField(c2, 1.0), standard_metric(c2)) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(integrate_face(ScalarField(c, 1.0), g, c->faces()[0]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("affine fields integrate exactly on flat blocks") {
  const ChartPtr c = torus(8, 9);
  const ScalarField f = make_scalar(c, [&](std::size_t i) { return 1.0 + 4.0 * c->coord(i, 2); });
  CHECK(integrate(f, standard_metric(c)) == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("hemisphere volume and equator area") {
  const ChartPtr c = hemisphere(16);
  const MetricField g = standard_metric(c);
  CHECK(integrate(ScalarField(c, 1.0), g) == doctest::Approx(kPi * kPi).epsilon(1e-3));
  CHECK(integrate_face(ScalarField(c, 1.0), g, c->faces()[0]) == doctest::Approx(4 * kPi).epsilon(1e-3));
}

TEST_CASE("collar layers and face slots") {
  const ChartPtr c = torus(4, 9);
  const Face low{2, 0}, high{2, 1};
  const std::size_t node = c->node_at({1, 2, 6});
  CHECK(collar_layer(*c, low, node) == 6);
  CHECK(collar_layer(*c, high, node) == 2);
  CHECK(collar_distance(*c, high, node) == doctest::Approx(0.25));
  const std::size_t f = face_node_of(*c, low, node);
  CHECK(f == c->node_at({1, 2, 0}));
  CHECK(c->face_nodes(low)[face_slot(*c, low, f)] == f);
}

TEST_CASE("collar slab keeps the face at its low end") {
  const ChartPtr c = torus(4, 9);
  const Slab s = collar_slab(c, Face{2, 1}, 5);
  CHECK(s.reversed);
  CHECK(s.chart->axis(2).count == 5);
  CHECK(s.source[0] == c->node_at({0, 0, 8}));
  const MetricField g = make_metric(c, [&](std::size_t i) {
    Mat m = Mat::Identity(3, 3);
    m(0, 2) = m(2, 0) = 0.1 * c->coord(i, 2);
    return m;
  });
  const MetricField gs = restrict_metric(g, s);
  CHECK(gs.at(0)(0, 2) == doctest::Approx(-0.1));
}
