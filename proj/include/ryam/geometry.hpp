#pragma once

#include "ryam/grid.hpp"

#include <functional>

namespace ryam {

struct CurvatureBundle {
  std::vector<double> christoffel;  // Gamma^a_bc at index node*n^3 + (a*n + b)*n + c
  SymTensorField ricci;
  ScalarField scalar;
  ScalarField weyl_norm;
};

CurvatureBundle curvature(const MetricField& g);

struct BoundaryGeometry {
  BoundaryTensorField second_fundamental;
  BoundaryField mean_curvature;
  BoundaryTensorField induced_metric;
  BoundaryField area_density;  // sqrt det of the induced metric
  int normal_axis = 0;
};

// A_ij = g(nabla_{e_i} e_j, nu) with nu the inward unit normal; H = g^{ij} A_ij.
BoundaryGeometry boundary_geometry(const MetricField& g, const Face& face);

// Largest |H| accepted as a minimal boundary: 1e-6 plus h^2 for the largest grid step h,
// since the discrete H of an exactly minimal face is only O(h^2).
double minimal_boundary_tolerance(const GridChart& chart);

// |A|^2_g at each face node.
BoundaryField second_form_norm2(const BoundaryGeometry& bg);

ScalarField laplacian(const MetricField& g, const ScalarField& u);

ScalarField conformal_scalar_curvature(const MetricField& g, const ScalarField& u);
ScalarField conformal_scalar_curvature(const MetricField& g, const ScalarField& scalar_g,
                                       const ScalarField& u);
MetricField conformal_metric(const MetricField& g, const ScalarField& u);

// P_g(h) = -Delta(tr h) + nabla^i nabla^j h_ij - <h, Ric>.
ScalarField linearized_scalar_curvature(const MetricField& g, const SymTensorField& h);

// Largest generalized eigenvalue of (gbar, gtilde) over all nodes: the smallest q with
// q * gtilde >= gbar.
double comparison_constant(const MetricField& gbar, const MetricField& gtilde);

struct EscobarReport {
  bool a = false;  // n >= 6
  bool b = false;  // boundary umbilic
  bool c = false;  // Weyl tensor vanishes on the boundary
  bool d = false;  // Weyl tensor not identically zero
  bool in_esc = false;
  double umbilic_defect = 0.0;
  double boundary_weyl = 0.0;
  double interior_weyl = 0.0;
  double weyl_threshold = 0.0;
};

EscobarReport escobar_conditions(const MetricField& g);

struct VariationReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
  double interior_term = 0.0;
  double boundary_term = 0.0;
  double conformal_defect = 0.0;
};

using MetricPath = std::function<MetricField(double)>;

// Checks (int R dsigma)' = -int <Ric - R g/2, h> dsigma - int_M (2H' + f H) dsigma_g at t.
VariationReport variational_identity_check(const MetricPath& path, double t_step, double t = 0.0);

}  // namespace ryam
