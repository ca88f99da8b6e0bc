#include "ryam/yamabe.hpp"

#include "ryam/geometry.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ryam {

namespace {

double max_abs_mean_curvature(const MetricField& g) {
  double worst = 0.0;
  for (const Face& f : g.chart()->faces())
    for (double h : boundary_geometry(g, f).mean_curvature.values) worst = std::max(worst, std::abs(h));
  return worst;
}

void require_minimal(const MetricField& g, const char* what) {
  const double h = max_abs_mean_curvature(g);
  if (h > minimal_boundary_tolerance(*g.chart())) {
    std::ostringstream os;
    os << what << ": boundary is not minimal (max |H| = " << h << ")";
    throw PreconditionError(os.str());
  }
}

Eigen::VectorXd to_vector(const ScalarField& u) {
  return Eigen::Map<const Eigen::VectorXd>(u.values.data(), static_cast<Eigen::Index>(u.values.size()));
}

ScalarField to_field(const ChartPtr& chart, const Eigen::VectorXd& v) {
  return ScalarField(chart, std::vector<double>(v.data(), v.data() + v.size()));
}

double critical_exponent(int n) { return 2.0 * n / (n - 2.0); }

// SPD solves: a sparse LDLT for small systems, Jacobi-preconditioned CG above that, where
// the factorization fill-in of 3-dimensional stencils gets expensive.
class SpdSolver {
 public:
  SpdSolver(const SparseMat& a, const GridChart& chart) : direct_(use_direct(a, chart)) {
    if (direct_) {
      ldlt_.compute(a);
      if (ldlt_.info() != Eigen::Success) throw std::runtime_error("sparse factorization failed");
    } else {
      cg_.setTolerance(1e-13);
      cg_.setMaxIterations(20 * static_cast<Eigen::Index>(a.rows()));
      cg_.compute(a);
    }
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) {
    if (direct_) return ldlt_.solve(b);
    Eigen::VectorXd x = cg_.solve(b);
    if (cg_.info() != Eigen::Success) throw std::runtime_error("conjugate gradient did not converge");
    return x;
  }

 private:
  static constexpr Eigen::Index kDirectLimit = 6000;
  static constexpr std::size_t kThinSection = 256;

  // Thin slabs (few nodes across the longest axis) factor with little fill-in.
  static bool use_direct(const SparseMat& a, const GridChart& chart) {
    if (a.rows() <= kDirectLimit) return true;
    int longest = 0;
    for (const Axis& ax : chart.axes()) longest = std::max(longest, ax.count);
    return chart.size() / static_cast<std::size_t>(longest) <= kThinSection;
  }

  bool direct_;
  Eigen::SimplicialLDLT<SparseMat> ldlt_;
  Eigen::ConjugateGradient<SparseMat, Eigen::Lower | Eigen::Upper> cg_;
};

}  // namespace

YamabeOperator yamabe_operator(const MetricField& g) {
  return yamabe_operator(g, curvature(g).scalar);
}

YamabeOperator yamabe_operator(const MetricField& g, const ScalarField& scalar) {
  require_same_chart(g.chart(), scalar.chart, "yamabe_operator");
  const GridChart& chart = *g.chart();
  const int n = chart.dim();
  const std::size_t size = chart.size();
  YamabeOperator op;
  op.chart = g.chart();
  op.n = n;
  op.a = 4.0 * (n - 1.0) / (n - 2.0);

  std::vector<Mat> inv(size);
  std::vector<double> root(size);
  op.mass.resize(static_cast<Eigen::Index>(size));
  op.scalar = to_vector(scalar);
  for (std::size_t i = 0; i < size; ++i) {
    const Mat m = g.at(i);
    inv[i] = m.inverse();
    root[i] = std::sqrt(m.determinant());
    op.mass[static_cast<Eigen::Index>(i)] = chart.quadrature_weight(i) * root[i];
  }

  // Cells span consecutive nodes (wrapping on periodic axes). At each cell corner the
  // gradient comes from the n cell edges meeting there, weighted by 1/2^n of the cell.
  std::vector<int> cells(n);
  double cell_volume = 1.0;
  std::size_t cell_count = 1;
  for (int a = 0; a < n; ++a) {
    const Axis& ax = chart.axis(a);
    cells[a] = ax.periodic ? ax.count : ax.count - 1;
    cell_volume *= ax.step;
    cell_count *= static_cast<std::size_t>(cells[a]);
  }
  const int corners = 1 << n;
  const double corner_weight = cell_volume / corners;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(cell_count * corners * (n + 1) * (n + 1));
  std::vector<int> base(n);
  std::vector<std::size_t> nb(n);
  std::vector<double> coef(n);
  for (std::size_t cell = 0; cell < cell_count; ++cell) {
    std::size_t rest = cell;
    for (int a = 0; a < n; ++a) {
      base[a] = static_cast<int>(rest % cells[a]);
      rest /= cells[a];
    }
    for (int corner = 0; corner < corners; ++corner) {
      std::size_t v = 0;
      for (int a = 0; a < n; ++a) {
        const int k = (base[a] + ((corner >> a) & 1)) % chart.axis(a).count;
        v += static_cast<std::size_t>(k) * chart.stride(a);
      }
      for (int a = 0; a < n; ++a) {
        const int bit = (corner >> a) & 1;
        const int k = chart.index_along(v, a);
        const int other = (base[a] + (1 - bit)) % chart.axis(a).count;
        nb[a] = v + (static_cast<std::size_t>(other) - static_cast<std::size_t>(k)) * chart.stride(a);
        coef[a] = (bit ? -1.0 : 1.0) / chart.axis(a).step;  // D_a u = coef (u_nb - u_v)
      }
      const double w = corner_weight * root[v];
      const Mat& gi = inv[v];
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          const double c = w * gi(a, b) * coef[a] * coef[b];
          const auto ia = static_cast<int>(nb[a]), ib = static_cast<int>(nb[b]);
          const auto iv = static_cast<int>(v);
          trip.emplace_back(ia, ib, c);
          trip.emplace_back(ia, iv, -c);
          trip.emplace_back(iv, ib, -c);
          trip.emplace_back(iv, iv, c);
        }
    }
  }
  const auto dim = static_cast<Eigen::Index>(size);
  op.gradient_form.resize(dim, dim);
  op.gradient_form.setFromTriplets(trip.begin(), trip.end());
  SparseMat potential(dim, dim);
  std::vector<Eigen::Triplet<double>> diag;
  diag.reserve(size);
  for (Eigen::Index i = 0; i < dim; ++i) diag.emplace_back(i, i, op.scalar[i] * op.mass[i]);
  potential.setFromTriplets(diag.begin(), diag.end());
  op.K = op.a * op.gradient_form + potential;
  return op;
}

double einstein_hilbert(const MetricField& g) {
  const ScalarField r = curvature(g).scalar;
  const int n = g.dim();
  double total = 0.0, vol = 0.0;
  const GridChart& chart = *g.chart();
  const ScalarField root = volume_density(g);
  for (std::size_t i = 0; i < chart.size(); ++i) {
    const double m = chart.quadrature_weight(i) * root[i];
    total += r[i] * m;
    vol += m;
  }
  return total / std::pow(vol, (n - 2.0) / n);
}

void neumann_project(const GridChart& chart, Eigen::VectorXd& u) {
  for (const Face& f : chart.faces()) {
    const long s = f.inward() * static_cast<long>(chart.stride(f.axis));
    for (std::size_t node : chart.face_nodes(f)) {
      const auto i = static_cast<Eigen::Index>(node);
      u[i] = (4.0 * u[i + s] - u[i + 2 * s]) / 3.0;
    }
  }
}

double neumann_defect(const GridChart& chart, const Eigen::VectorXd& u) {
  double worst = 0.0;
  for (const Face& f : chart.faces()) {
    const long s = f.inward() * static_cast<long>(chart.stride(f.axis));
    const double h = chart.axis(f.axis).step;
    for (std::size_t node : chart.face_nodes(f)) {
      const auto i = static_cast<Eigen::Index>(node);
      worst = std::max(worst, std::abs(-3.0 * u[i] + 4.0 * u[i + s] - u[i + 2 * s]) / (2.0 * h));
    }
  }
  return worst;
}

double yamabe_quotient(const YamabeOperator& op, const Eigen::VectorXd& u) {
  const double q = critical_exponent(op.n);
  double denom = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) denom += op.mass[i] * std::pow(u[i], q);
  return u.dot(op.K * u) / std::pow(denom, (op.n - 2.0) / op.n);
}

double yamabe_quotient(const MetricField& g, const ScalarField& u) {
  require_same_chart(g.chart(), u.chart, "yamabe_quotient");
  if (!(u.min() > 0.0)) throw PreconditionError("yamabe_quotient: u must be positive");
  const Eigen::VectorXd v = to_vector(u);
  const double scale = 1.0 + v.cwiseAbs().maxCoeff();
  if (neumann_defect(*g.chart(), v) > 1e-8 * scale)
    throw PreconditionError("yamabe_quotient: u is not Neumann-projected");
  require_minimal(g, "yamabe_quotient");
  return yamabe_quotient(yamabe_operator(g), v);
}

Eigenpair neumann_first_eigenvalue(const MetricField& g) {
  return neumann_first_eigenvalue(yamabe_operator(g));
}

Eigenpair neumann_first_eigenvalue(const YamabeOperator& op) {
  const Eigen::VectorXd dinv = op.mass.cwiseSqrt().cwiseInverse();
  const SparseMat B = dinv.asDiagonal() * op.K * dinv.asDiagonal();
  const double rmin = op.scalar.minCoeff();
  const double shift = rmin - 0.01 * (1.0 + std::abs(rmin));
  SparseMat shifted = B;
  for (Eigen::Index i = 0; i < shifted.rows(); ++i) shifted.coeffRef(i, i) -= shift;
  SpdSolver solver(shifted, *op.chart);
  // Rounding leaves a residual floor near 1e-16 |B|; the eigenvalue error is quadratic in
  // the residual, so a floor well above that costs nothing.
  double norm_b = 0.0;
  for (Eigen::Index k = 0; k < B.outerSize(); ++k) {
    double row = 0.0;
    for (SparseMat::InnerIterator it(B, k); it; ++it) row += std::abs(it.value());
    norm_b = std::max(norm_b, row);
  }
  Eigen::VectorXd x = op.mass.cwiseSqrt();
  x.normalize();
  Eigenpair out;
  double lambda = x.dot(B * x), residual = 0.0;
  constexpr int kMaxIter = 5000;
  for (int it = 1; it <= kMaxIter; ++it) {
    x = solver.solve(x);
    x.normalize();
    const Eigen::VectorXd bx = B * x;
    lambda = x.dot(bx);
    residual = (bx - lambda * x).norm();
    out.iterations = it;
    if (residual <= 1e-10 * (1.0 + std::abs(lambda)) + 1e-14 * norm_b) break;
    if (it == kMaxIter) {
      std::ostringstream os;
      os << "neumann_first_eigenvalue: no convergence, residual " << residual;
      throw std::runtime_error(os.str());
    }
  }
  Eigen::VectorXd v = dinv.asDiagonal() * x;
  if (v.sum() < 0.0) v = -v;
  v /= v.cwiseAbs().maxCoeff();
  out.value = lambda;
  out.residual = residual;
  out.function = to_field(op.chart, v);
  return out;
}

double dense_first_eigenvalue(const YamabeOperator& op) {
  if (op.K.rows() > 2000) throw PreconditionError("dense_first_eigenvalue: too many unknowns");
  const Eigen::VectorXd dinv = op.mass.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd B = dinv.asDiagonal() * Eigen::MatrixXd(op.K) * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Verdict make_verdict(std::string name, double lhs, double rhs, double tolerance) {
  Verdict v;
  v.name = std::move(name);
  v.lhs = lhs;
  v.rhs = rhs;
  v.tolerance = tolerance;
  v.holds = lhs <= rhs + tolerance;
  return v;
}

YamabeReport relative_yamabe_constant(const MetricField& g, const YamabeOptions& opt) {
  require_minimal(g, "relative_yamabe_constant");
  const YamabeOperator op = yamabe_operator(g);
  const GridChart& chart = *g.chart();
  const int n = op.n;
  const double q = critical_exponent(n), theta = (n - 2.0) / n;
  const Eigen::Index dim = op.K.rows();

  // Descent runs over the non-face nodes v; face values follow from the Neumann relation
  // u_0 = (4 u_1 - u_2) / 3, so u = T v stays in the constrained space exactly.
  std::vector<Eigen::Index> column(static_cast<std::size_t>(dim), 0);
  std::vector<bool> on_face(static_cast<std::size_t>(dim), false);
  for (const Face& f : chart.faces())
    for (std::size_t node : chart.face_nodes(f)) on_face[node] = true;
  Eigen::Index free = 0;
  for (Eigen::Index i = 0; i < dim; ++i)
    column[static_cast<std::size_t>(i)] = on_face[static_cast<std::size_t>(i)] ? -1 : free++;
  std::vector<Eigen::Triplet<double>> tt;
  for (Eigen::Index i = 0; i < dim; ++i)
    if (!on_face[static_cast<std::size_t>(i)]) tt.emplace_back(i, column[static_cast<std::size_t>(i)], 1.0);
  for (const Face& f : chart.faces()) {
    const long s = f.inward() * static_cast<long>(chart.stride(f.axis));
    for (std::size_t node : chart.face_nodes(f)) {
      const auto i = static_cast<Eigen::Index>(node);
      tt.emplace_back(i, column[static_cast<std::size_t>(i + s)], 4.0 / 3.0);
      tt.emplace_back(i, column[static_cast<std::size_t>(i + 2 * s)], -1.0 / 3.0);
    }
  }
  SparseMat T(dim, free);
  T.setFromTriplets(tt.begin(), tt.end());
  const SparseMat Tt = T.transpose();

  auto normalize = [&](Eigen::VectorXd& v) {
    const Eigen::VectorXd u = T * v;
    double s = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) s += op.mass[i] * std::pow(u[i], q);
    v *= std::pow(s, -1.0 / q);
  };

  SparseMat precond = op.a * op.gradient_form;
  for (Eigen::Index i = 0; i < dim; ++i) precond.coeffRef(i, i) += op.mass[i];
  const SparseMat reduced = Tt * precond * T;
  SpdSolver solver(reduced, chart);

  YamabeReport rep;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(free);
  normalize(v);
  Eigen::VectorXd u = T * v;
  double value = yamabe_quotient(op, u);
  rep.functional_value = value;
  rep.history.push_back(value);
  Eigen::VectorXd grad(dim), trial(free), tu(dim);
  for (int it = 0; it < opt.max_iterations; ++it) {
    // With sum m u^q = 1 the gradient of E / N^theta is 2 K u - theta q E m u^{q-1}.
    const Eigen::VectorXd ku = op.K * u;
    const double energy = u.dot(ku);
    for (Eigen::Index i = 0; i < dim; ++i)
      grad[i] = 2.0 * ku[i] - theta * q * energy * op.mass[i] * std::pow(u[i], q - 1.0);
    const Eigen::VectorXd gr = Tt * grad;
    const Eigen::VectorXd dir = solver.solve(gr);
    rep.residual = std::sqrt(std::max(0.0, gr.dot(dir)));
    rep.iterations = it;
    if (rep.residual <= opt.tolerance) {
      rep.converged = true;
      break;
    }
    bool accepted = false;
    for (double step = 1.0; step >= 1e-12; step *= 0.5) {
      trial = v - step * dir;
      for (Eigen::Index i = 0; i < free; ++i) trial[i] = std::max(trial[i], opt.u_min);
      tu = T * trial;
      if (tu.minCoeff() < opt.u_min) continue;
      normalize(trial);
      tu = T * trial;
      const double val = yamabe_quotient(op, tu);
      if (val < value) {
        v = trial;
        u = tu;
        value = val;
        rep.history.push_back(val);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decreasing step left: rounding or the positivity clamp has stalled the descent.
      rep.converged = rep.residual <= 1e3 * opt.tolerance;
      break;
    }
  }
  rep.yamabe_constant_estimate = value;
  rep.minimizer = to_field(g.chart(), u);
  rep.eigenvalue = neumann_first_eigenvalue(op).value;
  rep.verdicts.push_back(
      make_verdict("estimate <= I(g)", rep.yamabe_constant_estimate, rep.functional_value, 0.0));
  return rep;
}

std::vector<Verdict> yamabe_sandwich(const MetricField& g, double y_estimate) {
  const ScalarField r = curvature(g).scalar;
  const int n = g.dim();
  const double vol = integrate(ScalarField(g.chart(), 1.0), g);
  const double scale = std::pow(vol, 2.0 / n);
  const double tol = 1e-12 * (1.0 + std::abs(y_estimate));
  std::vector<Verdict> out{make_verdict("(min R) Vol^{2/n} <= Y", r.min() * scale, y_estimate, tol),
                           make_verdict("Y <= (max R) Vol^{2/n}", y_estimate, r.max() * scale, tol)};
  if (y_estimate > 0.0)
    for (Verdict& v : out) {
      v.applicable = false;
      v.holds = true;
    }
  return out;
}

GluingBound gluing_eigenvalue_bound(const GlueResult& x, const MetricField& w1,
                                    const MetricField& w2) {
  GluingBound out;
  out.lambda_x = neumann_first_eigenvalue(x.metric).value;
  out.lambda_w1 = neumann_first_eigenvalue(w1).value;
  out.lambda_w2 = neumann_first_eigenvalue(w2).value;
  out.lambda_cyl = neumann_first_eigenvalue(x.cylinder).value;
  const double h = x.metric.chart()->max_step();
  out.slack = 10.0 * h * h;
  const double lo = std::min({out.lambda_w1, out.lambda_w2, out.lambda_cyl});
  out.bound = make_verdict("min(lambda_W1, lambda_W2, lambda_cyl) <= lambda_X", lo, out.lambda_x,
                           out.slack);
  out.positive = make_verdict("0 < lambda_X", 0.0, out.lambda_x, 0.0);
  out.positive.holds = out.lambda_x > 0.0;
  return out;
}

DoublingReport doubling_inequality_check(const MetricField& w, const Face& face,
                                         const std::vector<double>& deltas, double slack,
                                         const YamabeOptions& opt) {
  if (deltas.empty()) throw PreconditionError("doubling_inequality_check: no deltas");
  const int n = w.dim();
  DoublingReport rep;
  rep.y_piece = relative_yamabe_constant(w, opt).yamabe_constant_estimate;
  rep.scaled_piece = std::pow(2.0, 2.0 / n) * rep.y_piece;
  if (rep.y_piece > 0.0) {
    rep.verdict = make_verdict("2^{2/n} Y(W) <= Y(X)", rep.scaled_piece, 0.0, slack);
    rep.verdict.applicable = false;
    rep.verdict.holds = true;
    return rep;
  }
  const ScalarField r_w = curvature(w).scalar;
  for (double delta : deltas) {
    const Approximation ap = approximation_family(w, delta, face);
    DoublingStep step;
    step.delta = delta;
    step.eps = ap.eps;
    const ScalarField r_ap = curvature(ap.metric).scalar;
    for (std::size_t i = 0; i < r_w.values.size(); ++i)
      step.c0_distance = std::max(step.c0_distance, std::abs(r_ap[i] - r_w[i]));
    const MetricField x = double_manifold(GluePiece{&ap.metric, face, ap.eps});
    const YamabeReport yx = relative_yamabe_constant(x, opt);
    step.y_double = yx.yamabe_constant_estimate;
    const double vol = integrate(ScalarField(x.chart(), 1.0), x);
    step.lower_double = curvature(x).scalar.min() * std::pow(vol, 2.0 / n);
    if (step.c0_distance > 0.0)
      rep.observed_k = std::max(rep.observed_k,
                                std::max(0.0, rep.scaled_piece - step.y_double) / step.c0_distance);
    rep.sweep.push_back(step);
  }
  rep.verdict = make_verdict("2^{2/n} Y(W) <= Y(X)", rep.scaled_piece, rep.sweep.back().y_double, slack);
  return rep;
}

}  // namespace ryam
