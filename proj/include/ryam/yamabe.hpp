#pragma once

#include "ryam/constructions.hpp"
#include "ryam/grid.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace ryam {

using SparseMat = Eigen::SparseMatrix<double>;

// Discrete Yamabe operator -a Delta + R in weak form: K = a G + diag(R m), with G the
// corner-gradient Dirichlet form (symmetric, PSD, constants in the kernel) and m the
// lumped mass (quadrature weight times sqrt det g).
struct YamabeOperator {
  ChartPtr chart;
  int n = 0;
  double a = 0.0;  // 4(n-1)/(n-2)
  SparseMat gradient_form;
  Eigen::VectorXd mass;
  Eigen::VectorXd scalar;
  SparseMat K;

  double volume() const { return mass.sum(); }
};

YamabeOperator yamabe_operator(const MetricField& g);
YamabeOperator yamabe_operator(const MetricField& g, const ScalarField& scalar);

// Int R dsigma / Vol^{(n-2)/n}.
double einstein_hilbert(const MetricField& g);

// Sets u on each face layer so that the one-sided normal difference vanishes.
void neumann_project(const GridChart& chart, Eigen::VectorXd& u);
double neumann_defect(const GridChart& chart, const Eigen::VectorXd& u);

// [u^T K u] / [sum m u^{2n/(n-2)}]^{(n-2)/n}; u must be Neumann-projected and the faces
// minimal (|H| <= 1e-6).
double yamabe_quotient(const MetricField& g, const ScalarField& u);
double yamabe_quotient(const YamabeOperator& op, const Eigen::VectorXd& u);

struct Eigenpair {
  double value = 0.0;
  ScalarField function;
  int iterations = 0;
  double residual = 0.0;
};

// Smallest eigenvalue of K v = lambda M v by shifted inverse iteration.
Eigenpair neumann_first_eigenvalue(const MetricField& g);
Eigenpair neumann_first_eigenvalue(const YamabeOperator& op);
// Same problem by a full dense eigendecomposition; refuses more than 2000 unknowns.
double dense_first_eigenvalue(const YamabeOperator& op);

struct Verdict {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool applicable = true;
  bool holds = false;  // lhs <= rhs + tolerance
};

Verdict make_verdict(std::string name, double lhs, double rhs, double tolerance);

struct YamabeOptions {
  double u_min = 1e-6;
  double tolerance = 1e-6;
  int max_iterations = 5000;
};

struct YamabeReport {
  double functional_value = 0.0;  // I(g) at u = 1
  double eigenvalue = 0.0;
  double yamabe_constant_estimate = 0.0;  // an upper estimate of the infimum
  ScalarField minimizer;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> history;  // accepted quotient values
  std::vector<Verdict> verdicts;
};

YamabeReport relative_yamabe_constant(const MetricField& g, const YamabeOptions& opt = {});

// (min R) Vol^{2/n} <= y <= (max R) Vol^{2/n}, meaningful for y <= 0.
std::vector<Verdict> yamabe_sandwich(const MetricField& g, double y_estimate);

struct GluingBound {
  double lambda_x = 0.0;
  double lambda_w1 = 0.0;
  double lambda_w2 = 0.0;
  double lambda_cyl = 0.0;
  double slack = 0.0;  // 10 h^2
  Verdict bound;       // min(pieces) - slack <= lambda_x
  Verdict positive;    // lambda_x > 0
};

GluingBound gluing_eigenvalue_bound(const GlueResult& x, const MetricField& w1,
                                    const MetricField& w2);

struct DoublingStep {
  double delta = 0.0;
  double eps = 0.0;         // eps(delta) of the cutoff
  double c0_distance = 0.0; // sup |R_{g_delta} - R_g|
  double y_double = 0.0;    // upper estimate on X
  double lower_double = 0.0;  // (min R_X) Vol_X^{2/n}
};

struct DoublingReport {
  double y_piece = 0.0;
  double scaled_piece = 0.0;  // 2^{2/n} y_piece
  std::vector<DoublingStep> sweep;
  double observed_k = 0.0;    // max over the sweep of (scaled_piece - y_double)^+ / c0_distance
  Verdict verdict;
};

// Approximates W near `face` for each delta, doubles it and compares 2^{2/n} Y(W) with
// Y(X) at the smallest delta, allowing `slack`.
DoublingReport doubling_inequality_check(const MetricField& w, const Face& face,
                                         const std::vector<double>& deltas, double slack,
                                         const YamabeOptions& opt = {});

}  // namespace ryam
