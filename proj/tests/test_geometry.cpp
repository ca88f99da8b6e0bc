#include "ryam/constructions.hpp"
#include "ryam/geometry.hpp"
#include "ryam/models.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace ryam;

namespace {

const double kPi = std::numbers::pi;

ChartPtr torus(int n, int nr, int dim = 3) {
  std::vector<int> ext(dim, n);
  ext.back() = nr;
  return build_chart({ChartKind::TorusBlock, dim, ext, {}, 1.0, 0.0});
}

ChartPtr cap(int scale, double angle, int dim = 3) {
  std::vector<int> ext(dim, 2 * scale);
  ext[dim - 2] = 4 * scale;
  ext[dim - 1] = scale;
  return build_chart({ChartKind::SphereCap, dim, ext, {}, 1.0, angle});
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

double max_abs(const std::vector<double>& a) { return max_abs_diff(a, std::vector<double>(a.size(), 0.0)); }

}  // namespace

TEST_CASE("flat block is flat") {
  const ChartPtr c = torus(16, 16);
  const CurvatureBundle cb = curvature(standard_metric(c));
  CHECK(max_abs(cb.scalar.values) <= 1e-8);
  CHECK(max_abs(cb.weyl_norm.values) <= 1e-8);
}

TEST_CASE("scalar curvature is the trace of Ricci") {
  const ChartPtr c = torus(8, 9);
  const MetricField g = random_metric(c, 7, 0.1);
  const CurvatureBundle cb = curvature(g);
  double worst = 0.0;
  for (std::size_t i = 0; i < c->size(); ++i) {
    const Mat gi = g.at(i).inverse();
    worst = std::max(worst, std::abs(gi.cwiseProduct(cb.ricci.at(i)).sum() - cb.scalar[i]));
  }
  CHECK(worst <= 1e-8);
  CHECK(max_abs(cb.weyl_norm.values) <= 1e-8);  // dimension 3
}

TEST_CASE("round three-sphere cap converges to R = 6") {
  double err[3];
  int k = 0;
  for (int s : {8, 16, 32}) {
    const ScalarField r = curvature(standard_metric(cap(s, kPi / 2))).scalar;
    double e = 0.0;
    for (double v : r.values) e = std::max(e, std::abs(v - 6.0));
    err[k++] = e;
  }
  CHECK(err[1] <= 0.02 * 6.0);
  CHECK(std::log2(err[0] / err[1]) >= 1.7);
  CHECK(std::log2(err[1] / err[2]) >= 1.7);
}

TEST_CASE("round four-sphere cap is conformally flat") {
  double w[2];
  int k = 0;
  for (int s : {6, 12}) {
    const CurvatureBundle cb = curvature(standard_metric(cap(s, kPi / 2, 4)));
    w[k++] = max_abs(cb.weyl_norm.values);
    double e = 0.0;
    for (double v : cb.scalar.values) e = std::max(e, std::abs(v - 12.0));
    CHECK(e <= 0.1 * 12.0);
  }
  CHECK(w[0] <= 1e-6);
  CHECK(w[1] <= 1e-6);
}

TEST_CASE("product collar has a totally geodesic face") {
  const ChartPtr c = torus(8, 9);
  const MetricField g = make_metric(c, [&](std::size_t i) {
    Mat m = Mat::Identity(3, 3);
    m(0, 0) = 2.0 + 0.3 * std::cos(2 * kPi * c->coord(i, 1));
    m(0, 1) = m(1, 0) = 0.2;
    return m;
  });
  for (const Face& f : c->faces()) {
    const BoundaryGeometry bg = boundary_geometry(g, f);
    CHECK(max_abs(bg.mean_curvature.values) <= 1e-8);
    for (const Mat& a : bg.second_fundamental.values) CHECK(a.cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("second fundamental form of a linear collar") {
  const ChartPtr c = torus(6, 9);
  const Face face{2, 0};
  const std::vector<std::size_t> nodes = c->face_nodes(face);
  Mat a0(2, 2), g0(2, 2);
  a0 << 0.12, -0.05, -0.05, 0.3;
  g0 << 1.5, 0.2, 0.2, 0.8;
  BoundaryTensorField gm{face, nodes, std::vector<Mat>(nodes.size(), g0)};
  BoundaryTensorField am{face, nodes, std::vector<Mat>(nodes.size(), a0)};
  const MetricField g = collar_metric(gm, am, c);
  const BoundaryGeometry bg = boundary_geometry(g, face);
  const double h = (g0.inverse().cwiseProduct(a0)).sum();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    CHECK((bg.second_fundamental.values[k] - a0).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(bg.mean_curvature.values[k] == doctest::Approx(h).epsilon(1e-6));
    CHECK((bg.induced_metric.values[k] - g0).cwiseAbs().maxCoeff() <= 1e-14);
  }
  CHECK_THROWS_AS(boundary_geometry(g, Face{0, 0}), PreconditionError);
}

TEST_CASE("geodesic sphere of radius pi/3") {
  const ChartPtr c = cap(16, kPi / 3);
  const BoundaryGeometry bg = boundary_geometry(standard_metric(c), c->faces()[0]);
  for (double h : bg.mean_curvature.values) CHECK(h == doctest::Approx(2.0 / std::tan(kPi / 3)).epsilon(0.02));
}

TEST_CASE("conformal change by constants") {
  const ChartPtr c = cap(8, kPi / 2);
  const MetricField g = standard_metric(c);
  const ScalarField r = curvature(g).scalar;
  CHECK(max_abs_diff(conformal_scalar_curvature(g, ScalarField(c, 1.0)).values, r.values) <= 1e-10);
  const double k = 1.7;
  const ScalarField rk = conformal_scalar_curvature(g, ScalarField(c, k));
  for (std::size_t i = 0; i < c->size(); ++i) CHECK(rk[i] == doctest::Approx(std::pow(k, -4.0) * r[i]).epsilon(1e-12));
  CHECK(max_abs_diff(conformal_metric(g, ScalarField(c, 1.0)).tensor().data(), g.tensor().data()) == 0.0);
  const MetricField g2 = conformal_metric(g, ScalarField(c, std::pow(2.0, 0.25)));
  for (std::size_t i = 0; i < g.tensor().data().size(); ++i)
    CHECK(g2.tensor().data()[i] == doctest::Approx(2.0 * g.tensor().data()[i]).epsilon(1e-14));
  CHECK_THROWS_AS(conformal_metric(g, ScalarField(c, 0.0)), PreconditionError);
  CHECK_THROWS_AS(conformal_scalar_curvature(g, ScalarField(c, -1.0)), PreconditionError);
}

TEST_CASE("flat four-dimensional block with u = 1 + r^2 phi/2") {
  const ChartPtr c = torus(4, 65, 4);
  const MetricField g = standard_metric(c);
  const double phi0 = 0.1;
  const ScalarField u = make_scalar(c, [&](std::size_t i) {
    const double r = c->coord(i, 3);
    return 1.0 + 0.5 * r * r * phi0;
  });
  const ScalarField a = conformal_scalar_curvature(g, u);
  const ScalarField b = curvature(conformal_metric(g, u)).scalar;
  for (std::size_t f : c->face_nodes(Face{3, 0})) {
    CHECK(a[f] == doctest::Approx(-0.6).epsilon(1e-3 / 0.6));
    CHECK(b[f] == doctest::Approx(-0.6).epsilon(1e-3 / 0.6));
  }
}

TEST_CASE("two conformal curvature paths agree to O(h^2)") {
  const ChartPtr c = torus(16, 17);
  const double h2 = c->max_step() * c->max_step();
  for (std::uint64_t seed = 11; seed <= 13; ++seed) {
    const MetricField g = random_metric(c, seed, 0.1);
    const ScalarField u = random_conformal_factor(c, seed + 100, 0.05);
    const ScalarField a = curvature(conformal_metric(g, u)).scalar;
    const ScalarField b = conformal_scalar_curvature(g, u);
    const double scale = std::max(1.0, max_abs(b.values));
    CHECK(max_abs_diff(a.values, b.values) <= 5.0 * h2 * scale);
  }
}

TEST_CASE("linearized scalar curvature") {
  const ChartPtr c = torus(16, 17);
  const MetricField g = standard_metric(c);
  SymTensorField zero(c);
  CHECK(max_abs(linearized_scalar_curvature(g, zero).values) == 0.0);

  // h = eps s g on flat space: P = -(n-1) eps Delta s.
  const double eps = 0.01, w = 2 * kPi;
  SymTensorField h(c);
  std::vector<double> expect(c->size());
  for (std::size_t i = 0; i < c->size(); ++i) {
    const double x = c->coord(i, 0), r = c->coord(i, 2);
    const double s = std::cos(w * x) * std::cos(kPi * r);
    h.set(i, eps * s * Mat::Identity(3, 3));
    expect[i] = 2.0 * eps * (w * w + kPi * kPi) * s;
  }
  const ScalarField p = linearized_scalar_curvature(g, h);
  const double t = 1e-5;
  SymTensorField gt = g.tensor();
  for (std::size_t k = 0; k < gt.data().size(); ++k) gt.data()[k] += t * h.data()[k];
  const ScalarField rt = curvature(MetricField(gt)).scalar;
  double fd = 0.0, exact = 0.0;
  const double scale = max_abs(expect);
  for (std::size_t i = 0; i < c->size(); ++i) {
    fd = std::max(fd, std::abs(p[i] - rt[i] / t));
    exact = std::max(exact, std::abs(p[i] - expect[i]));
  }
  CHECK(fd <= 1e-4 * scale);
  CHECK(exact <= 10.0 * c->max_step() * c->max_step() * scale);
}

TEST_CASE("linearization remainder is quadratic") {
  const ChartPtr c = torus(8, 9);
  const MetricField g = random_metric(c, 3, 0.1);
  const MetricField q = random_metric(c, 4, 0.2);
  const ScalarField r0 = curvature(g).scalar;
  double res[2];
  int k = 0;
  for (double amp : {0.02, 0.01}) {
    SymTensorField h(c), gh = g.tensor();
    for (std::size_t i = 0; i < c->size(); ++i) h.set(i, amp * (q.at(i) - Mat::Identity(3, 3)) / 0.2);
    for (std::size_t j = 0; j < gh.data().size(); ++j) gh.data()[j] += h.data()[j];
    const ScalarField p = linearized_scalar_curvature(g, h);
    const ScalarField r1 = curvature(MetricField(gh)).scalar;
    double m = 0.0;
    for (std::size_t i = 0; i < c->size(); ++i) m = std::max(m, std::abs(r1[i] - r0[i] - p[i]));
    res[k++] = m;
  }
  CHECK(res[0] / res[1] == doctest::Approx(4.0).epsilon(0.15));
}

TEST_CASE("Escobar classification") {
  const EscobarReport e3 = escobar_conditions(standard_metric(torus(6, 7)));
  CHECK_FALSE(e3.a);
  CHECK(e3.in_esc);

  const EscobarReport e6 = escobar_conditions(standard_metric(torus(4, 5, 6)));
  CHECK(e6.a);
  CHECK(e6.b);
  CHECK(e6.c);
  CHECK_FALSE(e6.d);
  CHECK(e6.in_esc);

  const EscobarReport hemi = escobar_conditions(standard_metric(cap(8, kPi / 2)));
  CHECK_FALSE(hemi.a);
  CHECK(hemi.in_esc);
}

TEST_CASE("variational identity on trivial paths") {
  const ChartPtr c = torus(6, 9);
  const MetricField g = random_metric(c, 5, 0.1);
  const VariationReport still = variational_identity_check([&](double) { return g; }, 1e-4);
  CHECK(still.lhs == 0.0);
  CHECK(still.rhs == 0.0);

  const MetricField flat = standard_metric(c);
  const VariationReport scale = variational_identity_check(
      [&](double t) { return conformal_metric(flat, ScalarField(c, std::pow(1.0 + t, 0.25))); }, 1e-4, 0.2);
  CHECK(std::abs(scale.lhs) <= 1e-9);
  CHECK(std::abs(scale.rhs) <= 1e-9);
}

TEST_CASE("variational identity needs a conformal boundary variation") {
  const ChartPtr c = torus(6, 9);
  const MetricField flat = standard_metric(c);
  auto path = [&](double t) {
    return make_metric(c, [&](std::size_t) {
      Mat m = Mat::Identity(3, 3);
      m(0, 0) += t;
      return m;
    });
  };
  CHECK_THROWS_AS(variational_identity_check(path, 1e-3), PreconditionError);
  CHECK_THROWS_AS(variational_identity_check(path, 0.0), PreconditionError);
}

TEST_CASE("minimal boundary tolerance") {
  const ChartPtr c = cap(16, kPi / 2);
  CHECK(minimal_boundary_tolerance(*c) == doctest::Approx(1e-6 + kPi * kPi / 1024));
  const BoundaryGeometry bg = boundary_geometry(standard_metric(c), c->faces()[0]);
  CHECK(max_abs(bg.mean_curvature.values) <= minimal_boundary_tolerance(*c));
}
