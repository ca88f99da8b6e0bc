#pragma once

#include "ryam/geometry.hpp"
#include "ryam/grid.hpp"

#include <functional>

namespace ryam {

// Cutoff w_delta(t): 1 on [0, eps], 0 on [delta, inf), with eps = exp(-1/delta)/4.
// Between the plateaus w = 1 - S(x), x = log(t/eps) / log(delta/eps), where S is a
// C^2 step whose derivative has a flat top (cubic ramps over a quarter of [0, 1]).
class CutoffFunction {
 public:
  explicit CutoffFunction(double delta);

  double delta() const { return delta_; }
  double eps() const { return eps_; }
  double log_length() const { return len_; }

  double operator()(double t) const;
  double d1(double t) const;  // dw/dt
  double d2(double t) const;  // d^2w/dt^2

 private:
  double delta_, eps_, len_;
};

CutoffFunction kobayashi_cutoff(double delta);

// Sup norms of t w', t w'' and t^2 w'' over log-spaced samples in [eps/10, 10 delta],
// plus the plateau and monotonicity checks.
struct CutoffAudit {
  double max_t_d1 = 0.0;
  double max_t_d2 = 0.0;
  double max_t2_d2 = 0.0;
  bool plateaus = true;
  bool monotone = true;
  bool in_range = true;
};

CutoffAudit audit_cutoff(const CutoffFunction& w, int samples = 10000);

// Boundary metric g and second fundamental form A of `face`, with the collar metric
// (g - 2 r A) + dr^2 evaluated at any collar distance r.
struct CollarAssembly {
  Face face;
  BoundaryTensorField boundary_metric;
  BoundaryTensorField second_form;
  Mat at(std::size_t slot, double r) const;
};

CollarAssembly collar_assembly(const MetricField& g, const Face& face);

// (g - 2 r A) + dr^2 on the whole chart, r measured from `face`.
MetricField collar_metric(const BoundaryTensorField& g, const BoundaryTensorField& A,
                          const ChartPtr& chart);

// phi = -(n-2)/(4(n-1)) (R_gbar - R_ghat) on the face, ghat the collar metric built
// from gbar's own boundary data. Both curvatures use the same differencing, so phi is
// exactly zero when gbar already is the collar metric.
BoundaryField phi_field(const MetricField& gbar, const Face& face);

// gbar + w(r) (target - gbar), r the collar distance from `face`.
MetricField blend_metrics(const MetricField& base, const MetricField& target,
                          const std::function<double(double)>& w, const Face& face);

struct Approximation {
  MetricField metric;
  BoundaryField phi;
  double delta = 0.0;
  double eps = 0.0;
};

// Minimal-boundary approximation g_delta of a metric with H = 0 on `face`: conformally
// a product within eps(delta) of the face, umbilic boundary, zero mean curvature.
Approximation approximation_family(const MetricField& gbar, double delta, const Face& face);

// One side of a gluing: a metric, the face that is glued, and the collar radius within
// which it is conformally (1 + r^2 f / 2)^{4/(n-2)} (h + dr^2).
struct GluePiece {
  const MetricField* metric = nullptr;
  Face face;
  double product_radius = 0.0;
};

// Largest violation of g = F (h + dr^2), h the metric of the face node below, over the
// collar layers within `radius` of the face (always the face layer, at most max_layers).
// Relative to 1 + |g|.
double conformal_product_defect(const MetricField& g, const Face& face, double radius,
                                int max_layers);

struct GlueResult {
  MetricField metric;      // X = W1 u (M0 x [0, ell]) u W2 on one chart
  MetricField cylinder;    // the middle piece on its own chart, faces at both ends
  int w1_last = 0;         // collar index of the W1 seam in X
  int w2_first = 0;        // collar index of the W2 seam in X
  double ell = 0.0;
};

// Glues two pieces through a conformally flat cylinder whose conformal factor follows
// f1 and f2 near each end, cut off with w_delta.
GlueResult glue_metrics(const GluePiece& w1, const GluePiece& w2, const BoundaryTensorField& h,
                        const BoundaryField& f1, const BoundaryField& f2, double ell,
                        double delta);

// Mirror image of a piece across its face; X has one chart with the seam as the shared
// middle layer and no boundary at the seam.
MetricField double_manifold(const GluePiece& w);

struct PscPath {
  MetricField metric;
  double min_scalar = 0.0;
};

// g_t = (t u + (1 - t))^{4/(n-2)} g0 for a metric g0 with R > 0.
PscPath psc_linear_path(const MetricField& g0, const ScalarField& u, double t);

}  // namespace ryam
