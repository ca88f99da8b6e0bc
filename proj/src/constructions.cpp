#include "ryam/constructions.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ryam {

namespace {

// Flat-top C^2 step on [0, 1]: S' rises with a cubic over [0, a], stays at 1/(1-a),
// and falls symmetrically.
constexpr double kRamp = 0.25;

double step_value(double x) {
  const double c = 1.0 / (1.0 - kRamp);
  if (x > 0.5) return 1.0 - step_value(1.0 - x);
  if (x <= kRamp) {
    const double y = x / kRamp;
    return c * kRamp * (y * y * y - 0.5 * y * y * y * y);
  }
  return c * (0.5 * kRamp + x - kRamp);
}

double step_d1(double x) {
  const double c = 1.0 / (1.0 - kRamp);
  if (x > 0.5) x = 1.0 - x;
  if (x <= kRamp) {
    const double y = x / kRamp;
    return c * (3.0 * y * y - 2.0 * y * y * y);
  }
  return c;
}

double step_d2(double x) {
  const double c = 1.0 / (1.0 - kRamp);
  double sign = 1.0;
  if (x > 0.5) {
    x = 1.0 - x;
    sign = -1.0;
  }
  if (x <= kRamp) {
    const double y = x / kRamp;
    return sign * c / kRamp * (6.0 * y - 6.0 * y * y);
  }
  return 0.0;
}

double conformal_power(int n) { return 4.0 / (n - 2); }

// (1 + r^2 f / 2)^{4/(n-2)}, rejecting non-positive bases.
double conformal_factor(double r, double f, int n, const char* what) {
  const double base = 1.0 + 0.5 * r * r * f;
  if (!(base > 0.0)) {
    std::ostringstream os;
    os << what << ": conformal factor is not positive at r = " << r;
    throw PreconditionError(os.str());
  }
  return std::pow(base, conformal_power(n));
}

// Embeds a tangential (n-1)-block and a collar component into an n x n matrix.
Mat assemble(const Mat& tangential, double collar, const std::vector<int>& tang, int c, int n) {
  Mat m = Mat::Zero(n, n);
  for (std::size_t i = 0; i < tang.size(); ++i)
    for (std::size_t j = 0; j < tang.size(); ++j) m(tang[i], tang[j]) = tangential(i, j);
  m(c, c) = collar;
  return m;
}

double max_abs(const Mat& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

CutoffFunction::CutoffFunction(double delta) : delta_(delta) {
  if (!(delta > 0.0 && delta <= 1.0))
    throw PreconditionError("kobayashi_cutoff: delta must lie in (0, 1]");
  eps_ = 0.25 * std::exp(-1.0 / delta);
  len_ = std::log(delta_ / eps_);
}

double CutoffFunction::operator()(double t) const {
  if (t <= eps_) return 1.0;
  if (t >= delta_) return 0.0;
  return 1.0 - step_value(std::log(t / eps_) / len_);
}

double CutoffFunction::d1(double t) const {
  if (t <= eps_ || t >= delta_) return 0.0;
  const double x = std::log(t / eps_) / len_;
  return -step_d1(x) / (len_ * t);
}

double CutoffFunction::d2(double t) const {
  if (t <= eps_ || t >= delta_) return 0.0;
  const double x = std::log(t / eps_) / len_;
  return (-step_d2(x) / len_ + step_d1(x)) / (len_ * t * t);
}

CutoffFunction kobayashi_cutoff(double delta) { return CutoffFunction(delta); }

CutoffAudit audit_cutoff(const CutoffFunction& w, int samples) {
  CutoffAudit out;
  const double lo = std::log(w.eps() / 10.0), hi = std::log(10.0 * w.delta());
  double prev = w(0.0);
  out.plateaus = prev == 1.0;
  for (int i = 0; i < samples; ++i) {
    const double t = std::exp(lo + (hi - lo) * i / (samples - 1));
    const double v = w(t), d1 = w.d1(t), d2 = w.d2(t);
    out.max_t_d1 = std::max(out.max_t_d1, std::abs(t * d1));
    out.max_t_d2 = std::max(out.max_t_d2, std::abs(t * d2));
    out.max_t2_d2 = std::max(out.max_t2_d2, std::abs(t * t * d2));
    if (t <= w.eps() && v != 1.0) out.plateaus = false;
    if (t >= w.delta() && v != 0.0) out.plateaus = false;
    if (v > prev) out.monotone = false;
    if (v < 0.0 || v > 1.0) out.in_range = false;
    prev = v;
  }
  return out;
}

Mat CollarAssembly::at(std::size_t slot, double r) const {
  const Mat& g = boundary_metric.values[slot];
  const Mat& A = second_form.values[slot];
  const int m = static_cast<int>(g.rows());
  Mat out = Mat::Zero(m + 1, m + 1);
  out.topLeftCorner(m, m) = g - 2.0 * r * A;
  out(m, m) = 1.0;
  return out;
}

CollarAssembly collar_assembly(const MetricField& g, const Face& face) {
  BoundaryGeometry bg = boundary_geometry(g, face);
  return CollarAssembly{face, std::move(bg.induced_metric), std::move(bg.second_fundamental)};
}

MetricField collar_metric(const BoundaryTensorField& g, const BoundaryTensorField& A,
                          const ChartPtr& chart) {
  if (!(g.face == A.face) || g.nodes != A.nodes)
    throw PreconditionError("collar_metric: g and A live on different faces");
  const Face face = g.face;
  if (!chart->has_face(face)) throw PreconditionError("collar_metric: chart lacks the face");
  if (g.nodes.size() != chart->face_nodes(face).size())
    throw PreconditionError("collar_metric: boundary data does not match the chart face");
  const int n = chart->dim();
  const std::vector<int> tang = tangential_axes(*chart, face);
  SymTensorField t(chart);
  for (std::size_t i = 0; i < chart->size(); ++i) {
    const std::size_t slot = face_slot(*chart, face, face_node_of(*chart, face, i));
    const double r = collar_distance(*chart, face, i);
    const Mat block = g.values[slot] - 2.0 * r * A.values[slot];
    if (block.llt().info() != Eigen::Success) {
      std::ostringstream os;
      os << "collar_metric: g - 2rA is not positive definite at r = " << r;
      throw PreconditionError(os.str());
    }
    // Mixed collar components stay zero; the sign of the collar direction is irrelevant.
    t.set(i, assemble(block, 1.0, tang, face.axis, n));
  }
  return MetricField(std::move(t));
}

BoundaryField phi_field(const MetricField& gbar, const Face& face) {
  const ChartPtr& chart = gbar.chart();
  if (!chart->has_face(face)) throw PreconditionError("phi_field: chart lacks the face");
  const int n = chart->dim();
  const Slab slab = collar_slab(chart, face, 5);
  const MetricField local = restrict_metric(gbar, slab);
  const Face low{face.axis, 0};
  const BoundaryGeometry bg = boundary_geometry(local, low);
  const MetricField ghat = collar_metric(bg.induced_metric, bg.second_fundamental, slab.chart);
  const ScalarField r_bar = curvature(local).scalar;
  const ScalarField r_hat = curvature(ghat).scalar;
  const double c = (n - 2.0) / (4.0 * (n - 1.0));
  BoundaryField phi;
  phi.face = face;
  phi.nodes = chart->face_nodes(face);
  phi.values.resize(phi.nodes.size());
  const std::vector<std::size_t> slab_nodes = slab.chart->face_nodes(low);
  for (std::size_t k = 0; k < slab_nodes.size(); ++k) {
    const std::size_t s = slab_nodes[k];
    phi.values[face_slot(*chart, face, slab.source[s])] = -c * (r_bar[s] - r_hat[s]);
  }
  return phi;
}

MetricField blend_metrics(const MetricField& base, const MetricField& target,
                          const std::function<double(double)>& w, const Face& face) {
  require_same_chart(base.chart(), target.chart(), "blend_metrics");
  const ChartPtr& chart = base.chart();
  SymTensorField t(chart);
  for (std::size_t i = 0; i < chart->size(); ++i) {
    const double wi = w(collar_distance(*chart, face, i));
    if (wi == 0.0)
      t.set(i, base.at(i));
    else if (wi == 1.0)
      t.set(i, target.at(i));
    else
      t.set(i, base.at(i) + wi * (target.at(i) - base.at(i)));
  }
  return MetricField(std::move(t));
}

Approximation approximation_family(const MetricField& gbar, double delta, const Face& face) {
  const ChartPtr& chart = gbar.chart();
  if (!chart->has_face(face)) throw PreconditionError("approximation_family: chart lacks the face");
  const Axis& ax = chart->axis(face.axis);
  if (!(delta > 0.0) || delta >= (ax.count - 1) * ax.step)
    throw PreconditionError("approximation_family: delta must lie inside the collar");
  const int n = chart->dim();
  const int c = face.axis;
  const BoundaryGeometry bg = boundary_geometry(gbar, face);
  std::size_t worst = 0;
  for (std::size_t k = 1; k < bg.mean_curvature.values.size(); ++k)
    if (std::abs(bg.mean_curvature.values[k]) > std::abs(bg.mean_curvature.values[worst])) worst = k;
  if (std::abs(bg.mean_curvature.values[worst]) > minimal_boundary_tolerance(*chart)) {
    std::ostringstream os;
    os << "approximation_family: mean curvature " << bg.mean_curvature.values[worst]
       << " at face node " << bg.mean_curvature.nodes[worst] << " (minimal boundary required)";
    throw PreconditionError(os.str());
  }
  for (std::size_t node : bg.mean_curvature.nodes) {
    const Mat m = gbar.at(node);
    double mixed = std::abs(m(c, c) - 1.0);
    for (int a = 0; a < n; ++a)
      if (a != c) mixed = std::max(mixed, std::abs(m(a, c)));
    if (mixed > 1e-8 * (1.0 + max_abs(m)))
      throw PreconditionError(
          "approximation_family: the collar axis is not a unit normal coordinate at the face");
  }

  Approximation out{gbar, phi_field(gbar, face), delta, 0.0};
  const CutoffFunction w(delta);
  out.eps = w.eps();
  const BoundaryField a2 = second_form_norm2(bg);
  const std::vector<int> tang = tangential_axes(*chart, face);
  const double kA = 3.0 * (n - 2.0) / (4.0 * (n - 1.0));
  SymTensorField t(chart);
  for (std::size_t i = 0; i < chart->size(); ++i) {
    const double r = collar_distance(*chart, face, i);
    const double wi = w(r);
    if (wi == 0.0) {
      t.set(i, gbar.at(i));
      continue;
    }
    const std::size_t slot = face_slot(*chart, face, face_node_of(*chart, face, i));
    const Mat& g = bg.induced_metric.values[slot];
    const Mat& A = bg.second_fundamental.values[slot];
    const double phi = out.phi.values[slot];
    const double phi_d = phi - kA * (2.0 - wi) * wi * a2.values[slot];
    const Mat target = conformal_factor(r, phi_d, n, "approximation_family") *
                       assemble(g - 2.0 * r * (1.0 - wi) * A, 1.0, tang, c, n);
    if (wi == 1.0) {
      t.set(i, target);
      continue;
    }
    // gbar + w (S - gbar) + (T - S), with S the conformally rescaled collar metric: equals
    // T near the face, gbar beyond delta, and reduces to T when gbar = S.
    const Mat S = conformal_factor(r, phi, n, "approximation_family") *
                  assemble(g - 2.0 * r * A, 1.0, tang, c, n);
    const Mat gb = gbar.at(i);
    t.set(i, gb + wi * (S - gb) + (target - S));
  }
  out.metric = MetricField(std::move(t));
  return out;
}

namespace {

struct LayerSource {
  int piece;  // 0 = first piece, 1 = middle, 2 = second piece
  int layer;
  bool flip;
};

}  // namespace

double conformal_product_defect(const MetricField& g, const Face& face, double radius,
                                int max_layers) {
  const GridChart& chart = *g.chart();
  const int n = chart.dim(), c = face.axis;
  const std::vector<std::size_t> fnodes = chart.face_nodes(face);
  const std::size_t step = chart.stride(c);
  const long dir = face.side == 0 ? 1 : -1;
  double worst = 0.0;
  const int layers = std::min(max_layers, chart.axis(c).count);
  for (int layer = 0; layer < layers; ++layer) {
    if (layer > 0 && layer * chart.axis(c).step > radius) break;
    for (std::size_t f : fnodes) {
      const std::size_t node = static_cast<std::size_t>(static_cast<long>(f) + dir * layer * static_cast<long>(step));
      const Mat m = g.at(node), h = g.at(f);
      const double scale = 1.0 + max_abs(m);
      double d = 0.0;
      for (int a = 0; a < n; ++a) {
        if (a == c) continue;
        d = std::max(d, std::abs(m(a, c)));
        for (int b = 0; b < n; ++b)
          if (b != c) d = std::max(d, std::abs(m(a, b) - m(c, c) * h(a, b) / h(c, c)));
      }
      worst = std::max(worst, d / scale);
    }
  }
  return worst;
}

namespace {

struct Pieces {
  const MetricField* first;
  Face first_face;
  const MetricField* second;
  Face second_face;
};

// Ends of the concatenated collar axis and the reference profile that matches them.
struct Joined {
  ChartPtr chart;
  std::vector<LayerSource> layers;
};

double pole_distance(const GridChart& chart, int side) {
  const Axis& ax = chart.axis(chart.collar_axis());
  const AxisEnd end = side == 0 ? ax.low : ax.high;
  if (end != AxisEnd::Open) return -1.0;
  if (chart.profile().kind != Profile::Kind::Polar)
    throw PreconditionError("glue: open collar end without a polar profile");
  return std::abs(chart.profile().pole - ax.coord(side == 0 ? 0 : ax.count - 1));
}

Joined join_charts(const Pieces& p, int middle_layers) {
  const GridChart& a = *p.first->chart();
  const GridChart& b = *p.second->chart();
  const int c = a.collar_axis();
  if (p.first_face.axis != c || p.second_face.axis != c || b.dim() != a.dim())
    throw PreconditionError("glue: pieces must be glued along their collar axes");
  for (int k = 0; k < c; ++k) {
    const Axis &x = a.axis(k), &y = b.axis(k);
    if (x.count != y.count || x.periodic != y.periodic || std::abs(x.step - y.step) > 1e-12 * x.step ||
        std::abs(x.origin - y.origin) > 1e-12)
      throw PreconditionError("glue: tangential grids of the pieces differ");
  }
  const double h = a.axis(c).step;
  if (std::abs(b.axis(c).step - h) > 1e-12 * h)
    throw PreconditionError("glue: collar steps of the pieces differ");
  const bool angular_a = a.profile().kind != Profile::Kind::Flat;
  if (angular_a != (b.profile().kind != Profile::Kind::Flat))
    throw PreconditionError("glue: pieces have incompatible backgrounds");

  Joined j;
  const int na = a.axis(c).count, nb = b.axis(c).count;
  const bool flip_a = p.first_face.side == 0;
  for (int k = 0; k < na; ++k) j.layers.push_back({0, flip_a ? na - 1 - k : k, flip_a});
  for (int k = 1; k <= middle_layers; ++k) j.layers.push_back({1, k, false});
  const bool flip_b = p.second_face.side == 1;
  for (int k = (middle_layers < 0 ? 1 : 0); k < nb; ++k)
    j.layers.push_back({2, flip_b ? nb - 1 - k : k, flip_b});

  const int far_a = 1 - p.first_face.side, far_b = 1 - p.second_face.side;
  const Axis& axa = a.axis(c);
  const Axis& axb = b.axis(c);
  Axis col{static_cast<int>(j.layers.size()), 0.0, h, false, far_a == 0 ? axa.low : axa.high,
           far_b == 0 ? axb.low : axb.high};
  const double x_end = col.coord(col.count - 1);
  const double d_lo = pole_distance(a, far_a), d_hi = pole_distance(b, far_b);
  Profile prof;
  if (!angular_a) {
    prof.kind = Profile::Kind::Flat;
  } else if (d_lo < 0.0 && d_hi < 0.0) {
    prof.kind = Profile::Kind::Unit;
  } else {
    prof.kind = Profile::Kind::Sine;
    if (d_lo >= 0.0 && d_hi >= 0.0) {
      prof.span = x_end + d_lo + d_hi;
      prof.offset = -d_lo;
    } else if (d_lo >= 0.0) {
      prof.span = 2.0 * (x_end + d_lo);
      prof.offset = -d_lo;
    } else {
      prof.span = 2.0 * (x_end + d_hi);
      prof.offset = x_end + d_hi - prof.span;
    }
  }
  std::vector<Axis> axes = a.axes();
  axes[c] = col;
  std::vector<Face> faces;
  if (col.low == AxisEnd::Face) faces.push_back({c, 0});
  if (col.high == AxisEnd::Face) faces.push_back({c, 1});
  j.chart = std::make_shared<const GridChart>(a.kind(), std::move(axes), std::move(faces), prof,
                                              a.cap_angle());
  return j;
}

Mat flip_collar(Mat m, int c) {
  for (int a = 0; a < m.rows(); ++a)
    if (a != c) {
      m(a, c) = -m(a, c);
      m(c, a) = -m(c, a);
    }
  return m;
}

MetricField fill_joined(const Joined& j, const Pieces& p,
                        const std::function<Mat(std::size_t, int)>& middle) {
  const GridChart& x = *j.chart;
  const int c = x.collar_axis();
  const std::size_t layer = x.stride(c);
  SymTensorField t(j.chart);
  for (std::size_t k = 0; k < j.layers.size(); ++k) {
    const LayerSource& s = j.layers[k];
    for (std::size_t tn = 0; tn < layer; ++tn) {
      Mat m;
      if (s.piece == 1) {
        m = middle(tn, s.layer);
      } else {
        const MetricField& src = s.piece == 0 ? *p.first : *p.second;
        m = src.at(tn + static_cast<std::size_t>(s.layer) * layer);
        if (s.flip) m = flip_collar(m, c);
      }
      t.set(tn + k * layer, m);
    }
  }
  return MetricField(std::move(t));
}

}  // namespace

GlueResult glue_metrics(const GluePiece& w1, const GluePiece& w2, const BoundaryTensorField& h,
                        const BoundaryField& f1, const BoundaryField& f2, double ell,
                        double delta) {
  if (!w1.metric || !w2.metric) throw PreconditionError("glue_metrics: missing piece");
  const GridChart& a = *w1.metric->chart();
  const int n = a.dim(), c = a.collar_axis();
  const double step = a.axis(c).step;
  if (!(delta > 0.0) || !(2.0 * delta <= ell))
    throw PreconditionError("glue_metrics: need 0 < delta <= ell / 2");
  const double m_real = ell / step;
  const int m = static_cast<int>(std::lround(m_real));
  if (m < 2 || std::abs(m_real - m) > 1e-9 * m_real)
    throw PreconditionError("glue_metrics: ell must be a multiple (>= 2) of the collar step");
  const Pieces p{w1.metric, w1.face, w2.metric, w2.face};
  Joined j = join_charts(p, m - 1);

  // Face data must match h and both pieces must be conformally product near the faces.
  const std::vector<int> tang = tangential_axes(a, w1.face);
  for (const GluePiece* piece : {&w1, &w2}) {
    const GridChart& ch = *piece->metric->chart();
    const std::vector<std::size_t> fn = ch.face_nodes(piece->face);
    if (fn.size() != h.values.size()) throw PreconditionError("glue_metrics: h has the wrong size");
    for (std::size_t s = 0; s < fn.size(); ++s) {
      const Mat g = piece->metric->at(fn[s]);
      const Mat expect = assemble(h.values[s], 1.0, tang, c, n);
      if (max_abs(g - expect) > 1e-8 * (1.0 + max_abs(expect)))
        throw PreconditionError("glue_metrics: face metric does not match h");
    }
    if (conformal_product_defect(*piece->metric, piece->face, piece->product_radius, 3) > 1e-6)
      throw PreconditionError("glue_metrics: piece is not conformally product near its face");
  }
  if (f1.values.size() != h.values.size() || f2.values.size() != h.values.size())
    throw PreconditionError("glue_metrics: f1/f2 have the wrong size");

  const CutoffFunction w(delta);
  auto middle = [&](std::size_t tn, int layer) {
    const double r = layer * step;
    double factor = 1.0;
    if (r <= delta) factor *= conformal_factor(r, w(r) * f1.values[tn], n, "glue_metrics");
    const double q = ell - r;
    if (q <= delta) factor *= conformal_factor(q, w(q) * f2.values[tn], n, "glue_metrics");
    return Mat(factor * assemble(h.values[tn], 1.0, tang, c, n));
  };
  MetricField x = fill_joined(j, p, middle);

  std::vector<Axis> axes = a.axes();
  axes[c] = Axis{m + 1, 0.0, step, false, AxisEnd::Face, AxisEnd::Face};
  Profile prof;
  prof.kind = a.profile().kind == Profile::Kind::Flat ? Profile::Kind::Flat : Profile::Kind::Unit;
  auto cyl = std::make_shared<const GridChart>(
      prof.kind == Profile::Kind::Flat ? ChartKind::TorusBlock : ChartKind::Cylinder,
      std::move(axes), std::vector<Face>{{c, 0}, {c, 1}}, prof);
  const std::size_t layer = cyl->stride(c);
  MetricField cylinder = make_metric(cyl, [&](std::size_t i) {
    return middle(i % layer, static_cast<int>(i / layer));
  });
  const int w1_last = a.axis(c).count - 1;
  return GlueResult{std::move(x), std::move(cylinder), w1_last, w1_last + m, ell};
}

MetricField double_manifold(const GluePiece& w) {
  if (!w.metric) throw PreconditionError("double_manifold: missing piece");
  if (conformal_product_defect(*w.metric, w.face, w.product_radius, 3) > 1e-6)
    throw PreconditionError("double_manifold: metric is not conformally product near the face");
  const Pieces p{w.metric, w.face, w.metric, w.face};
  const Joined j = join_charts(p, -1);
  return fill_joined(j, p, [](std::size_t, int) -> Mat { return Mat(); });
}

PscPath psc_linear_path(const MetricField& g0, const ScalarField& u, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw PreconditionError("psc_linear_path: t outside [0, 1]");
  require_same_chart(g0.chart(), u.chart, "psc_linear_path");
  if (!(u.min() > 0.0)) throw PreconditionError("psc_linear_path: u must be positive");
  const ScalarField r0 = curvature(g0).scalar;
  if (!(r0.min() > 0.0)) throw PreconditionError("psc_linear_path: g0 must have R > 0");
  if (t == 0.0) return PscPath{g0, r0.min()};
  const ScalarField ut = make_scalar(g0.chart(), [&](std::size_t i) { return t * u[i] + (1.0 - t); });
  MetricField gt = conformal_metric(g0, ut);
  const double min_r = curvature(gt).scalar.min();
  return PscPath{std::move(gt), min_r};
}

}  // namespace ryam
