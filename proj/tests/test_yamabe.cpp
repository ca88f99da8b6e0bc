#include "ryam/models.hpp"
#include "ryam/yamabe.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ryam;

namespace {

const double kPi = std::numbers::pi;

ChartPtr torus(int n, int nr) { return build_chart({ChartKind::TorusBlock, 3, {n, n, nr}, {}, 1.0, 0.0}); }

ChartPtr hemisphere(int scale) {
  return build_chart({ChartKind::SphereCap, 3, {2 * scale, 4 * scale, scale}, {}, 1.0, kPi / 2});
}

Eigen::VectorXd as_vector(const ScalarField& u) { return Eigen::Map<const Eigen::VectorXd>(u.values.data(), u.values.size()); }

}  // namespace

TEST_CASE("Einstein-Hilbert functional") {
  CHECK(std::abs(einstein_hilbert(standard_metric(torus(8, 9)))) <= 1e-8);
  const MetricField h = standard_metric(hemisphere(16));
  CHECK(einstein_hilbert(h) == doctest::Approx(6.0 * std::pow(kPi * kPi, 2.0 / 3.0)).epsilon(0.01));

  // I(c^2 g) = I(g): c^2 g is the conformal change by u = c^{1/2} in dimension 3.
  const ChartPtr c = torus(8, 9);
  const MetricField g = random_metric(c, 9, 0.1);
  const double i0 = einstein_hilbert(g);
  for (double s : {0.5, 3.0}) {
    const double i1 = einstein_hilbert(conformal_metric(g, ScalarField(c, std::sqrt(s))));
    CHECK(std::abs(i1 - i0) <= 1e-8 * (1.0 + std::abs(i0)));
  }
}

TEST_CASE("Yamabe quotient") {
  const ChartPtr hc = hemisphere(16);
  const MetricField h = standard_metric(hc);
  CHECK(yamabe_quotient(h, ScalarField(hc, 1.0)) == doctest::Approx(einstein_hilbert(h)).epsilon(1e-12));

  // Against the functional of the conformal metric, for a Neumann-projected u.
  ScalarField u = make_scalar(hc, [&](std::size_t i) {
    const double psi = kPi / 2 - hc->coord(i, 2);
    return 1.0 + 0.2 * std::cos(2 * psi);
  });
  Eigen::VectorXd v = as_vector(u);
  neumann_project(*hc, v);
  CHECK(neumann_defect(*hc, v) <= 1e-8 * (1.0 + v.cwiseAbs().maxCoeff()));
  u.values.assign(v.data(), v.data() + v.size());
  const double q = yamabe_quotient(h, u);
  const double e = einstein_hilbert(conformal_metric(h, u));
  const double hstep = hc->max_step();
  CHECK(std::abs(q - e) <= 10.0 * hstep * hstep * std::abs(e));

  const ChartPtr fc = torus(8, 9);
  const ScalarField wave = make_scalar(fc, [&](std::size_t i) { return 1.0 + 0.1 * std::cos(2 * kPi * fc->coord(i, 0)); });
  CHECK(yamabe_quotient(standard_metric(fc), wave) > 0.0);

  const ScalarField ramp = make_scalar(fc, [&](std::size_t i) { return 1.0 + 0.1 * fc->coord(i, 2); });
  CHECK_THROWS_AS(yamabe_quotient(standard_metric(fc), ramp), PreconditionError);
  const ChartPtr third = build_chart({ChartKind::SphereCap, 3, {16, 32, 8}, {}, 1.0, kPi / 3});
  CHECK_THROWS_AS(yamabe_quotient(standard_metric(third), ScalarField(third, 1.0)), PreconditionError);
}

TEST_CASE("first Neumann eigenvalue") {
  const ChartPtr c = torus(8, 9);
  const MetricField flat = standard_metric(c);
  const Eigenpair e0 = neumann_first_eigenvalue(flat);
  CHECK(std::abs(e0.value) <= 1e-6);
  CHECK(e0.function.max() - e0.function.min() <= 1e-6 * e0.function.max());

  const Eigenpair ec = neumann_first_eigenvalue(yamabe_operator(flat, ScalarField(c, 2.5)));
  CHECK(ec.value == doctest::Approx(2.5).epsilon(1e-6 / 2.5));

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const YamabeOperator op = yamabe_operator(random_metric(c, seed, 0.1));
    const Eigenpair e = neumann_first_eigenvalue(op);
    CHECK(e.value >= op.scalar.minCoeff());
    CHECK(e.value <= op.scalar.maxCoeff());
    CHECK(std::abs(e.value - dense_first_eigenvalue(op)) <= 1e-8);
    CHECK(e.function.min() > 0.0);
  }
  CHECK_THROWS_AS(dense_first_eigenvalue(yamabe_operator(standard_metric(torus(16, 17)))), PreconditionError);
}

TEST_CASE("relative Yamabe constant on a flat block") {
  const YamabeReport r = relative_yamabe_constant(standard_metric(torus(8, 9)));
  CHECK(std::abs(r.yamabe_constant_estimate) <= 1e-4);
  CHECK(std::abs(r.eigenvalue) <= 1e-6);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  for (const Verdict& v : yamabe_sandwich(standard_metric(torus(8, 9)), r.yamabe_constant_estimate))
    CHECK(v.holds);
}

TEST_CASE("constant negative curvature pinches the sandwich") {
  const ChartPtr c = torus(4, 65);
  const MetricField g = sol_block(c, 1.0 / std::sqrt(2.0));
  const YamabeReport r = relative_yamabe_constant(g);
  const double vol = yamabe_operator(g).volume();
  CHECK(r.yamabe_constant_estimate == doctest::Approx(-std::pow(vol, 2.0 / 3.0)).epsilon(0.01));
  CHECK(r.eigenvalue < 0.0);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  const std::vector<Verdict> vs = yamabe_sandwich(g, r.yamabe_constant_estimate);
  REQUIRE_FALSE(vs.empty());
  for (const Verdict& v : vs) {
    CHECK(v.applicable);
    CHECK(v.holds);
    CHECK(v.holds == (v.lhs <= v.rhs + v.tolerance));
  }
}

TEST_CASE("sandwich needs a nonpositive estimate") {
  for (const Verdict& v : yamabe_sandwich(standard_metric(hemisphere(5)), 1.0)) CHECK_FALSE(v.applicable);
}

TEST_CASE("descent from the round hemisphere cannot rise") {
  const MetricField h = standard_metric(hemisphere(8));
  YamabeOptions opt;
  opt.max_iterations = 20;
  const YamabeReport r = relative_yamabe_constant(h, opt);
  CHECK(r.functional_value == doctest::Approx(einstein_hilbert(h)));
  CHECK(r.yamabe_constant_estimate <= r.functional_value * 1.01);
  CHECK(r.eigenvalue > 0.0);
  CHECK(r.yamabe_constant_estimate > 0.0);
}

TEST_CASE("relative Yamabe constant needs minimal faces") {
  const ChartPtr third = build_chart({ChartKind::SphereCap, 3, {16, 32, 8}, {}, 1.0, kPi / 3});
  CHECK_THROWS_AS(relative_yamabe_constant(standard_metric(third)), PreconditionError);
}

TEST_CASE("gluing bound on flat pieces") {
  const ChartPtr c = torus(6, 9);
  const MetricField g = standard_metric(c);
  const Face face{2, 0};
  const std::vector<std::size_t> nodes = c->face_nodes(face);
  const BoundaryTensorField h{face, nodes, std::vector<Mat>(nodes.size(), Mat::Identity(2, 2))};
  const BoundaryField f{face, nodes, std::vector<double>(nodes.size(), 0.0)};
  const double step = c->axis(2).step;
  const GlueResult x = glue_metrics(GluePiece{&g, face, 1.0}, GluePiece{&g, face, 1.0}, h, f, f, 4 * step, 2 * step);
  const GluingBound gb = gluing_eigenvalue_bound(x, g, g);
  for (double l : {gb.lambda_x, gb.lambda_w1, gb.lambda_w2, gb.lambda_cyl}) CHECK(std::abs(l) <= 1e-6);
  CHECK(gb.bound.holds);
  CHECK(std::abs(gb.positive.lhs) <= 1e-6);
}

TEST_CASE("doubling a flat block") {
  const ChartPtr c = torus(4, 17);
  const DoublingReport d = doubling_inequality_check(standard_metric(c), Face{2, 0}, {0.4, 0.2}, 1e-3);
  CHECK(std::abs(d.y_piece) <= 1e-4);
  REQUIRE(d.sweep.size() == 2);
  for (const DoublingStep& s : d.sweep) {
    CHECK(std::abs(s.y_double) <= 1e-4);
    CHECK(std::abs(s.lower_double) <= 1e-8);
  }
  CHECK(d.verdict.holds);
}
