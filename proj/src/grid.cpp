#include "ryam/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace ryam {

double Profile::rho(double x) const {
  switch (kind) {
    case Kind::Polar: return pole - x;
    case Kind::Sine: {
      const double c = std::numbers::pi / span;
      return std::sin(c * (x - offset)) / c;
    }
    default: return 1.0;
  }
}

double Profile::drho(double x) const {
  switch (kind) {
    case Kind::Polar: return -1.0;
    case Kind::Sine: return std::cos(std::numbers::pi / span * (x - offset));
    default: return 0.0;
  }
}

double Profile::ddrho(double x) const {
  if (kind != Kind::Sine) return 0.0;
  const double c = std::numbers::pi / span;
  return -c * std::sin(c * (x - offset));
}

GridChart::GridChart(ChartKind kind, std::vector<Axis> axes, std::vector<Face> faces,
                     Profile profile, double cap_angle)
    : kind_(kind),
      axes_(std::move(axes)),
      faces_(std::move(faces)),
      profile_(profile),
      cap_angle_(cap_angle) {
  const int n = dim();
  if (n < 3) throw PreconditionError("chart dimension must be at least 3");
  if (n > kMaxDim) throw PreconditionError("chart dimension exceeds supported maximum");
  strides_.resize(n);
  size_ = 1;
  for (int a = 0; a < n; ++a) {
    const Axis& ax = axes_[a];
    if (ax.step <= 0.0) throw PreconditionError("axis step must be positive");
    if (ax.periodic && ax.count < 3) throw PreconditionError("periodic axis needs at least 3 nodes");
    if (!ax.periodic && ax.count < 5) {
      std::ostringstream os;
      os << "non-periodic axis " << a << " has " << ax.count << " nodes; at least 5 are required";
      throw PreconditionError(os.str());
    }
    strides_[a] = size_;
    size_ *= static_cast<std::size_t>(ax.count);
  }
  for (const Face& f : faces_) {
    if (f.axis < 0 || f.axis >= n || axes_[f.axis].periodic)
      throw PreconditionError("boundary face on a periodic or missing axis");
    const AxisEnd end = f.side == 0 ? axes_[f.axis].low : axes_[f.axis].high;
    if (end != AxisEnd::Face) throw PreconditionError("boundary face on an open axis end");
  }
}

std::size_t GridChart::node_at(const std::vector<int>& multi) const {
  std::size_t idx = 0;
  for (int a = 0; a < dim(); ++a) idx += strides_[a] * static_cast<std::size_t>(multi[a]);
  return idx;
}

bool GridChart::has_face(const Face& f) const {
  for (const Face& g : faces_)
    if (g == f) return true;
  return false;
}

std::vector<std::size_t> GridChart::face_nodes(const Face& f) const {
  if (!has_face(f)) throw PreconditionError("face not found on chart");
  const int k = f.side == 0 ? 0 : axes_[f.axis].count - 1;
  std::vector<std::size_t> out;
  out.reserve(size_ / axes_[f.axis].count);
  for (std::size_t i = 0; i < size_; ++i)
    if (index_along(i, f.axis) == k) out.push_back(i);
  return out;
}

double GridChart::axis_weight(int a, int k) const {
  const Axis& ax = axes_[a];
  if (ax.periodic) return ax.step;
  if (k == 0 && ax.low == AxisEnd::Face) return 0.5 * ax.step;
  if (k == ax.count - 1 && ax.high == AxisEnd::Face) return 0.5 * ax.step;
  return ax.step;
}

double GridChart::quadrature_weight(std::size_t node) const {
  double w = 1.0;
  for (int a = 0; a < dim(); ++a) w *= axis_weight(a, index_along(node, a));
  return w;
}

double GridChart::face_weight(const Face& f, std::size_t node) const {
  double w = 1.0;
  for (int a = 0; a < dim(); ++a)
    if (a != f.axis) w *= axis_weight(a, index_along(node, a));
  return w;
}

double GridChart::max_step() const {
  double h = 0.0;
  for (const Axis& ax : axes_) h = std::max(h, ax.step);
  return h;
}

ReferenceFrame GridChart::reference(std::size_t node) const {
  ReferenceFrame ref;
  const int n = dim();
  ref.n = n;
  for (int i = 0; i < n; ++i) ref.s[i] = 1.0;
  if (profile_.kind == Profile::Kind::Flat) return ref;

  const int c = collar_axis();
  const double x = coord(node, c);
  const double rho = profile_.rho(x);
  const double d = profile_.drho(x) / rho;
  const double dd = profile_.ddrho(x) / rho - d * d;
  double sinprod = 1.0;
  for (int j = 0; j < n - 1; ++j) {
    ref.s[j] = rho * sinprod;
    ref.dlog[c][j] = d;
    ref.ddlog[c][c][j] = dd;
    for (int m = 0; m < j && m < n - 2; ++m) {
      const double th = coord(node, m);
      const double sn = std::sin(th);
      ref.dlog[m][j] = std::cos(th) / sn;
      ref.ddlog[m][m][j] = -1.0 / (sn * sn);
    }
    if (j < n - 2) sinprod *= std::sin(coord(node, j));
  }
  return ref;
}

bool GridChart::same_layout(const GridChart& o) const {
  if (kind_ != o.kind_ || dim() != o.dim() || faces_ != o.faces_) return false;
  if (profile_.kind != o.profile_.kind || profile_.pole != o.profile_.pole ||
      profile_.span != o.profile_.span || profile_.offset != o.profile_.offset)
    return false;
  for (int a = 0; a < dim(); ++a) {
    const Axis& x = axes_[a];
    const Axis& y = o.axes_[a];
    if (x.count != y.count || x.origin != y.origin || x.step != y.step ||
        x.periodic != y.periodic || x.low != y.low || x.high != y.high)
      return false;
  }
  return true;
}

ChartPtr build_chart(const ChartSpec& spec) {
  const int n = spec.dim;
  if (n < 3) throw PreconditionError("chart dimension must be at least 3");
  if (static_cast<int>(spec.extents.size()) != n)
    throw PreconditionError("extents must list one node count per axis");
  for (int e : spec.extents)
    if (e <= 0) throw PreconditionError("extents must be positive");

  std::vector<Axis> axes(n);
  std::vector<Face> faces;
  Profile profile;
  const int c = n - 1;

  switch (spec.kind) {
    case ChartKind::TorusBlock: {
      for (int a = 0; a < c; ++a) {
        const double period = spec.periods.empty() ? 1.0 : spec.periods.at(a);
        if (period <= 0.0) throw PreconditionError("torus period must be positive");
        axes[a] = Axis{spec.extents[a], 0.0, period / spec.extents[a], true};
      }
      if (spec.length <= 0.0) throw PreconditionError("collar length must be positive");
      if (spec.extents[c] < 5) throw PreconditionError("collar axis needs at least 5 nodes");
      axes[c] = Axis{spec.extents[c], 0.0, spec.length / (spec.extents[c] - 1), false};
      faces = {Face{c, 0}, Face{c, 1}};
      break;
    }
    case ChartKind::SphereCap:
    case ChartKind::Cylinder: {
      for (int a = 0; a < n - 2; ++a) {
        const double h = std::numbers::pi / spec.extents[a];
        axes[a] = Axis{spec.extents[a], 0.5 * h, h, false, AxisEnd::Open, AxisEnd::Open};
      }
      axes[n - 2] = Axis{spec.extents[n - 2], 0.0, 2.0 * std::numbers::pi / spec.extents[n - 2], true};
      if (spec.extents[c] < 5) throw PreconditionError("collar axis needs at least 5 nodes");
      if (spec.kind == ChartKind::SphereCap) {
        const double r0 = spec.cap_angle;
        if (!(r0 > 0.0 && r0 < std::numbers::pi))
          throw PreconditionError("cap angle must lie in (0, pi)");
        // r = r0 - psi; the last node sits one step short of the pole.
        axes[c] = Axis{spec.extents[c], 0.0, r0 / spec.extents[c], false, AxisEnd::Face, AxisEnd::Open};
        faces = {Face{c, 0}};
        profile = Profile{Profile::Kind::Polar, r0, 0.0, 0.0};
      } else {
        if (spec.length <= 0.0) throw PreconditionError("collar length must be positive");
        axes[c] = Axis{spec.extents[c], 0.0, spec.length / (spec.extents[c] - 1), false};
        faces = {Face{c, 0}, Face{c, 1}};
        profile = Profile{Profile::Kind::Unit, 0.0, 0.0, 0.0};
      }
      break;
    }
  }
  return std::make_shared<const GridChart>(spec.kind, std::move(axes), std::move(faces), profile,
                                           spec.kind == ChartKind::SphereCap ? spec.cap_angle : 0.0);
}

Stencil first_derivative_stencil(const GridChart& chart, std::size_t node, int axis) {
  const Axis& ax = chart.axis(axis);
  const long s = static_cast<long>(chart.stride(axis));
  const int k = chart.index_along(node, axis);
  const double h = ax.step;
  Stencil st;
  if (ax.periodic) {
    const long up = (k + 1 == ax.count) ? -(ax.count - 1) * s : s;
    const long dn = (k == 0) ? (ax.count - 1) * s : -s;
    st.len = 2;
    st.offset = {up, dn};
    st.coeff = {0.5 / h, -0.5 / h};
  } else if (k == 0) {
    st.len = 3;
    st.offset = {0, s, 2 * s};
    st.coeff = {-1.5 / h, 2.0 / h, -0.5 / h};
  } else if (k == ax.count - 1) {
    st.len = 3;
    st.offset = {0, -s, -2 * s};
    st.coeff = {1.5 / h, -2.0 / h, 0.5 / h};
  } else {
    st.len = 2;
    st.offset = {s, -s};
    st.coeff = {0.5 / h, -0.5 / h};
  }
  return st;
}

Stencil second_derivative_stencil(const GridChart& chart, std::size_t node, int axis) {
  const Axis& ax = chart.axis(axis);
  const long s = static_cast<long>(chart.stride(axis));
  const int k = chart.index_along(node, axis);
  const double h2 = ax.step * ax.step;
  Stencil st;
  if (ax.periodic) {
    const long up = (k + 1 == ax.count) ? -(ax.count - 1) * s : s;
    const long dn = (k == 0) ? (ax.count - 1) * s : -s;
    st.len = 3;
    st.offset = {up, 0, dn};
    st.coeff = {1.0 / h2, -2.0 / h2, 1.0 / h2};
  } else if (k == 0 || k == ax.count - 1) {
    const long d = (k == 0) ? s : -s;
    st.len = 4;
    st.offset = {0, d, 2 * d, 3 * d};
    st.coeff = {2.0 / h2, -5.0 / h2, 4.0 / h2, -1.0 / h2};
  } else {
    st.len = 3;
    st.offset = {s, 0, -s};
    st.coeff = {1.0 / h2, -2.0 / h2, 1.0 / h2};
  }
  return st;
}

void diff1(const GridChart& chart, const double* f, int ncomp, std::size_t node, int axis,
           double* out) {
  const Stencil st = first_derivative_stencil(chart, node, axis);
  for (int c = 0; c < ncomp; ++c) out[c] = 0.0;
  for (int p = 0; p < st.len; ++p) {
    const double* src = f + (static_cast<long>(node) + st.offset[p]) * ncomp;
    for (int c = 0; c < ncomp; ++c) out[c] += st.coeff[p] * src[c];
  }
}

void diff2(const GridChart& chart, const double* f, int ncomp, std::size_t node, int a, int b,
           double* out) {
  for (int c = 0; c < ncomp; ++c) out[c] = 0.0;
  if (a == b) {
    const Stencil st = second_derivative_stencil(chart, node, a);
    for (int p = 0; p < st.len; ++p) {
      const double* src = f + (static_cast<long>(node) + st.offset[p]) * ncomp;
      for (int c = 0; c < ncomp; ++c) out[c] += st.coeff[p] * src[c];
    }
    return;
  }
  const Stencil sa = first_derivative_stencil(chart, node, a);
  const Stencil sb = first_derivative_stencil(chart, node, b);
  for (int p = 0; p < sa.len; ++p)
    for (int q = 0; q < sb.len; ++q) {
      const double w = sa.coeff[p] * sb.coeff[q];
      const double* src = f + (static_cast<long>(node) + sa.offset[p] + sb.offset[q]) * ncomp;
      for (int c = 0; c < ncomp; ++c) out[c] += w * src[c];
    }
}

ScalarField::ScalarField(ChartPtr c, std::vector<double> v) : chart(std::move(c)), values(std::move(v)) {
  if (values.size() != chart->size()) throw PreconditionError("scalar field size does not match chart");
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!std::isfinite(values[i])) {
      std::ostringstream os;
      os << "scalar field is not finite at node " << i;
      throw PreconditionError(os.str());
    }
}

ScalarField::ScalarField(ChartPtr c, double value)
    : chart(std::move(c)), values(chart->size(), value) {}

double ScalarField::min() const {
  double m = values.front();
  for (double v : values) m = std::min(m, v);
  return m;
}

double ScalarField::max() const {
  double m = values.front();
  for (double v : values) m = std::max(m, v);
  return m;
}

SymTensorField::SymTensorField(ChartPtr c)
    : chart_(std::move(c)), n_(chart_->dim()), stride_(packed_size(n_)),
      data_(chart_->size() * static_cast<std::size_t>(stride_), 0.0) {}

Mat SymTensorField::at(std::size_t node) const {
  Mat m(n_, n_);
  const double* p = data_.data() + node * stride_;
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) {
      const double v = *p++;
      m(i, j) = v;
      m(j, i) = v;
    }
  return m;
}

void SymTensorField::set(std::size_t node, const Mat& m) {
  double* p = data_.data() + node * stride_;
  for (int i = 0; i < n_; ++i)
    for (int j = i; j < n_; ++j) *p++ = 0.5 * (m(i, j) + m(j, i));
}

MetricField::MetricField(SymTensorField t) : tensor_(std::move(t)) {
  const std::size_t N = tensor_.chart()->size();
  for (std::size_t i = 0; i < N; ++i) {
    const Mat m = tensor_.at(i);
    Eigen::LLT<Mat> llt(m);
    if (!m.allFinite() || llt.info() != Eigen::Success) {
      std::ostringstream os;
      os << "metric is not positive definite at node " << i;
      throw PreconditionError(os.str());
    }
  }
}

std::vector<int> tangential_axes(const GridChart& chart, const Face& face) {
  std::vector<int> out;
  for (int a = 0; a < chart.dim(); ++a)
    if (a != face.axis) out.push_back(a);
  return out;
}

int collar_layer(const GridChart& chart, const Face& face, std::size_t node) {
  const int k = chart.index_along(node, face.axis);
  return face.side == 0 ? k : chart.axis(face.axis).count - 1 - k;
}

double collar_distance(const GridChart& chart, const Face& face, std::size_t node) {
  return collar_layer(chart, face, node) * chart.axis(face.axis).step;
}

std::size_t face_node_of(const GridChart& chart, const Face& face, std::size_t node) {
  const int k = chart.index_along(node, face.axis);
  const int kf = face.side == 0 ? 0 : chart.axis(face.axis).count - 1;
  return node - static_cast<std::size_t>(k) * chart.stride(face.axis) +
         static_cast<std::size_t>(kf) * chart.stride(face.axis);
}

std::size_t face_slot(const GridChart& chart, const Face& face, std::size_t face_node) {
  // face_nodes() enumerates in increasing node order, i.e. lexicographically over the
  // remaining axes with the lowest axis fastest.
  std::size_t slot = 0, mul = 1;
  for (int a = 0; a < chart.dim(); ++a) {
    if (a == face.axis) continue;
    slot += mul * static_cast<std::size_t>(chart.index_along(face_node, a));
    mul *= static_cast<std::size_t>(chart.axis(a).count);
  }
  return slot;
}

Slab collar_slab(const ChartPtr& chart, const Face& face, int layers) {
  const int c = face.axis;
  const Axis& ax = chart->axis(c);
  if (layers < 5 || layers > ax.count) throw PreconditionError("collar_slab: bad layer count");
  std::vector<Axis> axes = chart->axes();
  Slab slab;
  slab.reversed = face.side == 1;
  Profile prof = chart->profile();
  if (slab.reversed && prof.kind != Profile::Kind::Flat && prof.kind != Profile::Kind::Unit)
    throw PreconditionError("collar_slab: high-side face on a chart with a radial profile");
  const double x0 = ax.coord(face.side == 0 ? 0 : ax.count - 1);
  axes[c] = Axis{layers, slab.reversed ? 0.0 : x0, ax.step, false, AxisEnd::Face, AxisEnd::Open};
  slab.chart = std::make_shared<const GridChart>(chart->kind(), std::move(axes),
                                                 std::vector<Face>{Face{c, 0}}, prof,
                                                 chart->cap_angle());
  slab.source.resize(slab.chart->size());
  for (std::size_t k = 0; k < slab.chart->size(); ++k) {
    const int layer = slab.chart->index_along(k, c);
    const std::size_t base = k - static_cast<std::size_t>(layer) * slab.chart->stride(c);
    const int src_layer = slab.reversed ? ax.count - 1 - layer : layer;
    // Tangential strides agree between the slab and the parent because the collar axis is last.
    slab.source[k] = base + static_cast<std::size_t>(src_layer) * chart->stride(c);
  }
  return slab;
}

MetricField restrict_metric(const MetricField& g, const Slab& slab) {
  const int c = slab.chart->dim() - 1;
  const int n = g.dim();
  return make_metric(slab.chart, [&](std::size_t k) {
    Mat m = g.at(slab.source[k]);
    if (slab.reversed)
      for (int a = 0; a < n; ++a)
        if (a != c) {
          m(a, c) = -m(a, c);
          m(c, a) = -m(c, a);
        }
    return m;
  });
}

void require_same_chart(const ChartPtr& a, const ChartPtr& b, const char* what) {
  if (a == b) return;
  if (!a || !b || !a->same_layout(*b)) throw PreconditionError(std::string(what) + ": chart mismatch");
}

Gradient gradient(const ScalarField& u, const MetricField& g) {
  require_same_chart(u.chart, g.chart(), "gradient");
  const GridChart& chart = *u.chart;
  const int n = chart.dim();
  Gradient out;
  out.covector.resize(chart.size() * n);
  std::vector<double> norm(chart.size());
  for (std::size_t i = 0; i < chart.size(); ++i) {
    Vec du(n);
    for (int a = 0; a < n; ++a) diff1(chart, u.values.data(), 1, i, a, &du(a));
    for (int a = 0; a < n; ++a) out.covector[i * n + a] = du(a);
    const Mat gi = g.at(i).inverse();
    norm[i] = du.dot(gi * du);
  }
  out.norm2 = ScalarField(u.chart, std::move(norm));
  return out;
}

ScalarField volume_density(const MetricField& g) {
  return make_scalar(g.chart(), [&](std::size_t i) { return std::sqrt(g.at(i).determinant()); });
}

double integrate(const ScalarField& f, const MetricField& g) {
  require_same_chart(f.chart, g.chart(), "integrate");
  const GridChart& chart = *g.chart();
  double sum = 0.0;
  for (std::size_t i = 0; i < chart.size(); ++i)
    sum += chart.quadrature_weight(i) * std::sqrt(g.at(i).determinant()) * f.values[i];
  return sum;
}

static double induced_density(const MetricField& g, const Face& face, std::size_t node) {
  const std::vector<int> tan = tangential_axes(*g.chart(), face);
  const Mat m = g.at(node);
  const int k = static_cast<int>(tan.size());
  Mat gm(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) gm(i, j) = m(tan[i], tan[j]);
  return std::sqrt(gm.determinant());
}

double integrate(const BoundaryField& f, const MetricField& g) {
  const GridChart& chart = *g.chart();
  if (!chart.has_face(f.face)) throw PreconditionError("integrate: unknown face");
  double sum = 0.0;
  for (std::size_t k = 0; k < f.nodes.size(); ++k) {
    const std::size_t i = f.nodes[k];
    sum += chart.face_weight(f.face, i) * induced_density(g, f.face, i) * f.values[k];
  }
  return sum;
}

double integrate_face(const ScalarField& f, const MetricField& g, const Face& face) {
  require_same_chart(f.chart, g.chart(), "integrate");
  return integrate(restrict_to_face(f, face), g);
}

BoundaryField restrict_to_face(const ScalarField& f, const Face& face) {
  BoundaryField out;
  out.face = face;
  out.nodes = f.chart->face_nodes(face);
  out.values.reserve(out.nodes.size());
  for (std::size_t i : out.nodes) out.values.push_back(f.values[i]);
  return out;
}

MetricField standard_metric(const ChartPtr& chart) {
  const int n = chart->dim();
  return make_metric(chart, [&](std::size_t i) {
    Mat m = Mat::Identity(n, n);
    if (chart->kind() == ChartKind::TorusBlock) return m;
    const double x = chart->coord(i, n - 1);
    double f = chart->kind() == ChartKind::SphereCap ? std::sin(chart->cap_angle() - x) : 1.0;
    f *= f;
    for (int j = 0; j < n - 1; ++j) {
      m(j, j) = f;
      if (j < n - 2) {
        const double s = std::sin(chart->coord(i, j));
        f *= s * s;
      }
    }
    return m;
  });
}

}  // namespace ryam
