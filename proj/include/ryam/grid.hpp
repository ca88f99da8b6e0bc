#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ryam {

inline constexpr int kMaxDim = 8;

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

// Raised when an operation's documented precondition does not hold.
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ChartKind { TorusBlock, SphereCap, Cylinder };

// How a non-periodic axis terminates. A Face end carries a boundary node; an
// Open end sits half a step or one step away from a coordinate singularity
// (a pole or a polar axis) and has no boundary.
enum class AxisEnd { Face, Open };

struct Axis {
  int count = 0;
  double origin = 0.0;
  double step = 0.0;
  bool periodic = false;
  AxisEnd low = AxisEnd::Face;
  AxisEnd high = AxisEnd::Face;

  double coord(int k) const { return origin + k * step; }
};

struct Face {
  int axis = 0;
  int side = 0;  // 0 = low end of the axis, 1 = high end

  bool operator==(const Face&) const = default;
  // Sign of the inward normal direction along the axis.
  int inward() const { return side == 0 ? 1 : -1; }
};

// Radial profile rho(x) of the background metric dx^2 + rho(x)^2 g_{S^{n-1}}
// used on angular charts. Differencing is done on components rescaled by the
// background scale factors, which keeps the polar singularities analytic.
struct Profile {
  enum class Kind { Flat, Polar, Unit, Sine };
  Kind kind = Kind::Flat;
  double pole = 0.0;    // Polar: rho = pole - x
  double span = 0.0;    // Sine: rho = (span/pi) sin(pi (x - offset) / span)
  double offset = 0.0;

  double rho(double x) const;
  double drho(double x) const;
  double ddrho(double x) const;
};

// Background scale factors s_i at a node, with d_k log s_i and d_k d_l log s_i.
struct ReferenceFrame {
  int n = 0;
  std::array<double, kMaxDim> s{};
  std::array<std::array<double, kMaxDim>, kMaxDim> dlog{};  // [k][i]
  std::array<std::array<std::array<double, kMaxDim>, kMaxDim>, kMaxDim> ddlog{};  // [k][l][i]
};

struct ChartSpec {
  ChartKind kind = ChartKind::TorusBlock;
  int dim = 3;
  std::vector<int> extents;
  std::vector<double> periods;  // TorusBlock: one period per periodic axis
  double length = 1.0;          // TorusBlock / Cylinder: collar length
  double cap_angle = 0.0;       // SphereCap
};

class GridChart {
 public:
  GridChart(ChartKind kind, std::vector<Axis> axes, std::vector<Face> faces, Profile profile,
            double cap_angle = 0.0);

  ChartKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(axes_.size()); }
  int collar_axis() const { return dim() - 1; }
  const std::vector<Axis>& axes() const { return axes_; }
  const Axis& axis(int a) const { return axes_[a]; }
  const std::vector<Face>& faces() const { return faces_; }
  const Profile& profile() const { return profile_; }
  double cap_angle() const { return cap_angle_; }

  std::size_t size() const { return size_; }
  std::size_t stride(int a) const { return strides_[a]; }
  int index_along(std::size_t node, int a) const {
    return static_cast<int>((node / strides_[a]) % axes_[a].count);
  }
  double coord(std::size_t node, int a) const { return axes_[a].coord(index_along(node, a)); }
  std::size_t node_at(const std::vector<int>& multi) const;

  bool has_face(const Face& f) const;
  std::vector<std::size_t> face_nodes(const Face& f) const;
  // Coordinate quadrature weight (product of per-axis trapezoid/midpoint weights).
  double quadrature_weight(std::size_t node) const;
  double axis_weight(int a, int k) const;
  // Weight of a face node in the boundary quadrature (tangential axes only).
  double face_weight(const Face& f, std::size_t node) const;
  double max_step() const;

  ReferenceFrame reference(std::size_t node) const;

  bool same_layout(const GridChart& other) const;

 private:
  ChartKind kind_;
  std::vector<Axis> axes_;
  std::vector<Face> faces_;
  Profile profile_;
  double cap_angle_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

using ChartPtr = std::shared_ptr<const GridChart>;

ChartPtr build_chart(const ChartSpec& spec);

// Finite-difference stencil: node offsets (already wrapped on periodic axes) and weights.
struct Stencil {
  int len = 0;
  std::array<long, 4> offset{};
  std::array<double, 4> coeff{};
};

Stencil first_derivative_stencil(const GridChart& chart, std::size_t node, int axis);
Stencil second_derivative_stencil(const GridChart& chart, std::size_t node, int axis);

// Derivatives of an interleaved multi-component field at one node.
void diff1(const GridChart& chart, const double* f, int ncomp, std::size_t node, int axis,
           double* out);
void diff2(const GridChart& chart, const double* f, int ncomp, std::size_t node, int a, int b,
           double* out);

struct ScalarField {
  ScalarField() = default;
  ScalarField(ChartPtr c, std::vector<double> v);
  ScalarField(ChartPtr c, double value);

  ChartPtr chart;
  std::vector<double> values;

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double min() const;
  double max() const;
};

inline int packed_size(int n) { return n * (n + 1) / 2; }
inline int packed_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

// Symmetric tensor per node, stored as the upper triangle.
class SymTensorField {
 public:
  SymTensorField() = default;
  explicit SymTensorField(ChartPtr c);

  const ChartPtr& chart() const { return chart_; }
  int dim() const { return n_; }
  Mat at(std::size_t node) const;
  void set(std::size_t node, const Mat& m);
  double component(std::size_t node, int i, int j) const {
    return data_[node * stride_ + packed_index(n_, i, j)];
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

 private:
  ChartPtr chart_;
  int n_ = 0;
  int stride_ = 0;
  std::vector<double> data_;
};

// Symmetric tensor field whose nodal matrices are positive definite.
class MetricField {
 public:
  explicit MetricField(SymTensorField t);

  const SymTensorField& tensor() const { return tensor_; }
  const ChartPtr& chart() const { return tensor_.chart(); }
  int dim() const { return tensor_.dim(); }
  Mat at(std::size_t node) const { return tensor_.at(node); }

 private:
  SymTensorField tensor_;
};

// Values attached to the nodes of one boundary face.
struct BoundaryField {
  Face face;
  std::vector<std::size_t> nodes;
  std::vector<double> values;
};

struct BoundaryTensorField {
  Face face;
  std::vector<std::size_t> nodes;
  std::vector<Mat> values;  // (n-1)x(n-1), tangential axes in chart order
};

std::vector<int> tangential_axes(const GridChart& chart, const Face& face);

// Layer index counted inward from the face, the collar distance r of a node, and the
// face node sharing its tangential position.
int collar_layer(const GridChart& chart, const Face& face, std::size_t node);
double collar_distance(const GridChart& chart, const Face& face, std::size_t node);
std::size_t face_node_of(const GridChart& chart, const Face& face, std::size_t node);
// Position of a face node inside face_nodes(face).
std::size_t face_slot(const GridChart& chart, const Face& face, std::size_t face_node);

// Sub-chart made of the first `layers` collar layers next to `face`, oriented so the
// face is at the low end; node k of the slab maps to source[k] of the parent.
struct Slab {
  ChartPtr chart;
  std::vector<std::size_t> source;
  bool reversed = false;
};
Slab collar_slab(const ChartPtr& chart, const Face& face, int layers);
// Restriction of a metric to a slab, flipping mixed collar components when reversed.
MetricField restrict_metric(const MetricField& g, const Slab& slab);

struct Gradient {
  std::vector<double> covector;  // n per node
  ScalarField norm2;             // g^{ij} d_i u d_j u
};

Gradient gradient(const ScalarField& u, const MetricField& g);

ScalarField volume_density(const MetricField& g);  // sqrt det g

double integrate(const ScalarField& f, const MetricField& g);
double integrate(const BoundaryField& f, const MetricField& g);
double integrate_face(const ScalarField& f, const MetricField& g, const Face& face);

BoundaryField restrict_to_face(const ScalarField& f, const Face& face);

void require_same_chart(const ChartPtr& a, const ChartPtr& b, const char* what);

// Metric built node by node from a callable taking the node index.
template <class Fn>
MetricField make_metric(const ChartPtr& chart, Fn&& fn) {
  SymTensorField t(chart);
  for (std::size_t i = 0; i < chart->size(); ++i) t.set(i, fn(i));
  return MetricField(std::move(t));
}

template <class Fn>
ScalarField make_scalar(const ChartPtr& chart, Fn&& fn) {
  std::vector<double> v(chart->size());
  for (std::size_t i = 0; i < chart->size(); ++i) v[i] = fn(i);
  return ScalarField(chart, std::move(v));
}

// Round metric of the chart's background: flat for TorusBlock, the unit sphere on
// SphereCap (r = cap_angle - psi), the unit-radius cylinder on Cylinder.
MetricField standard_metric(const ChartPtr& chart);

}  // namespace ryam
