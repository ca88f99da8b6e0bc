#include "ryam/geometry.hpp"

#include <cmath>
#include <sstream>

namespace ryam {

namespace {

// Coordinate derivatives of a symmetric tensor field whose components scale like
// s_i s_j near coordinate singularities. The rescaled components T_ij / (s_i s_j)
// are differenced; the scale factors are differentiated analytically.
class TensorDiff {
 public:
  explicit TensorDiff(const SymTensorField& t) : chart_(*t.chart()), n_(t.dim()), P_(packed_size(n_)) {
    hat_.resize(t.data().size());
    for (std::size_t i = 0; i < chart_.size(); ++i) {
      const ReferenceFrame ref = chart_.reference(i);
      for (int a = 0; a < n_; ++a)
        for (int b = a; b < n_; ++b) {
          const int p = packed_index(n_, a, b);
          hat_[i * P_ + p] = t.data()[i * P_ + p] / (ref.s[a] * ref.s[b]);
        }
    }
  }

  // d[k](i,j) = d_k T_ij; dd[k*n+l](i,j) = d_k d_l T_ij when dd is non-null.
  void at(std::size_t node, const ReferenceFrame& ref, Mat* d, Mat* dd) const {
    const int n = n_;
    double h0[kMaxDim * (kMaxDim + 1) / 2];
    double h1[kMaxDim][kMaxDim * (kMaxDim + 1) / 2];
    for (int p = 0; p < P_; ++p) h0[p] = hat_[node * P_ + p];
    for (int k = 0; k < n; ++k) diff1(chart_, hat_.data(), P_, node, k, h1[k]);
    for (int k = 0; k < n; ++k) {
      d[k].resize(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
          const int p = packed_index(n, i, j);
          const double w = ref.s[i] * ref.s[j];
          const double L = ref.dlog[k][i] + ref.dlog[k][j];
          d[k](i, j) = d[k](j, i) = w * (h1[k][p] + h0[p] * L);
        }
    }
    if (!dd) return;
    double h2[kMaxDim * (kMaxDim + 1) / 2];
    for (int k = 0; k < n; ++k)
      for (int l = k; l < n; ++l) {
        diff2(chart_, hat_.data(), P_, node, k, l, h2);
        Mat& out = dd[k * n + l];
        out.resize(n, n);
        for (int i = 0; i < n; ++i)
          for (int j = i; j < n; ++j) {
            const int p = packed_index(n, i, j);
            const double w = ref.s[i] * ref.s[j];
            const double Lk = ref.dlog[k][i] + ref.dlog[k][j];
            const double Ll = ref.dlog[l][i] + ref.dlog[l][j];
            const double LL = ref.ddlog[k][l][i] + ref.ddlog[k][l][j];
            out(i, j) = out(j, i) =
                w * (h2[p] + h1[k][p] * Ll + h1[l][p] * Lk + h0[p] * (LL + Lk * Ll));
          }
        if (l != k) dd[l * n + k] = out;
      }
  }

 private:
  const GridChart& chart_;
  int n_;
  int P_;
  std::vector<double> hat_;
};

struct NodeGeometry {
  int n = 0;
  Mat g, gi;
  Mat dg[kMaxDim];
  Mat ddg[kMaxDim * kMaxDim];
  double G1[kMaxDim][kMaxDim][kMaxDim];  // Gamma_{l,ij}
  double G2[kMaxDim][kMaxDim][kMaxDim];  // Gamma^k_ij
};

void fill_christoffel(NodeGeometry& ng) {
  const int n = ng.n;
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        ng.G1[l][i][j] = 0.5 * (ng.dg[i](l, j) + ng.dg[j](l, i) - ng.dg[l](i, j));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += ng.gi(k, l) * ng.G1[l][i][j];
        ng.G2[k][i][j] = s;
      }
}

double weyl_norm_at(int n, const double (&R)[kMaxDim][kMaxDim][kMaxDim][kMaxDim], const Mat& g,
                    const Mat& ric, double scal) {
  const Mat P = (ric - scal / (2.0 * (n - 1)) * g) / (n - 2);
  static thread_local double W[kMaxDim][kMaxDim][kMaxDim][kMaxDim];
  static thread_local double T[kMaxDim][kMaxDim][kMaxDim][kMaxDim];
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d)
          W[a][b][c][d] = R[a][b][c][d] - (P(a, c) * g(b, d) + P(b, d) * g(a, c) -
                                           P(a, d) * g(b, c) - P(b, c) * g(a, d));
  Eigen::LLT<Mat> llt(g);
  const Mat Linv = llt.matrixL().solve(Mat::Identity(n, n));
  const Mat E = Linv.transpose();  // columns form a g-orthonormal frame
  // Contract each slot with E in turn.
  for (int slot = 0; slot < 4; ++slot) {
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            double s = 0.0;
            for (int p = 0; p < n; ++p) {
              switch (slot) {
                case 0: s += W[p][b][c][d] * E(p, a); break;
                case 1: s += W[a][p][c][d] * E(p, b); break;
                case 2: s += W[a][b][p][d] * E(p, c); break;
                default: s += W[a][b][c][p] * E(p, d); break;
              }
            }
            T[a][b][c][d] = s;
          }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) W[a][b][c][d] = T[a][b][c][d];
  }
  double sum = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int d = 0; d < n; ++d) sum += W[a][b][c][d] * W[a][b][c][d];
  return std::sqrt(sum);
}

double inner(const Mat& gi, const Mat& a, const Mat& b) { return (gi * a * gi * b).trace(); }

}  // namespace

CurvatureBundle curvature(const MetricField& metric) {
  const ChartPtr& cp = metric.chart();
  const GridChart& chart = *cp;
  const int n = chart.dim();
  const std::size_t N = chart.size();
  const TensorDiff td(metric.tensor());

  CurvatureBundle out;
  out.christoffel.resize(N * n * n * n);
  out.ricci = SymTensorField(cp);
  std::vector<double> scal(N), weyl(N, 0.0);

  NodeGeometry ng;
  ng.n = n;
  static thread_local double R[kMaxDim][kMaxDim][kMaxDim][kMaxDim];
  for (std::size_t i = 0; i < N; ++i) {
    const ReferenceFrame ref = chart.reference(i);
    ng.g = metric.at(i);
    ng.gi = ng.g.inverse();
    td.at(i, ref, ng.dg, ng.ddg);
    fill_christoffel(ng);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) out.christoffel[((i * n + a) * n + b) * n + c] = ng.G2[a][b][c];

    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          for (int d = 0; d < n; ++d) {
            double v = 0.5 * (ng.ddg[b * n + c](a, d) + ng.ddg[a * n + d](b, c) -
                              ng.ddg[a * n + c](b, d) - ng.ddg[b * n + d](a, c));
            for (int f = 0; f < n; ++f)
              v += ng.G1[f][b][c] * ng.G2[f][a][d] - ng.G1[f][b][d] * ng.G2[f][a][c];
            R[a][b][c][d] = v;
          }
    Mat ric = Mat::Zero(n, n);
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d) {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          for (int c = 0; c < n; ++c) s += ng.gi(a, c) * R[a][b][c][d];
        ric(b, d) = s;
      }
    ric = 0.5 * (ric + ric.transpose()).eval();
    out.ricci.set(i, ric);
    scal[i] = (ng.gi.cwiseProduct(ric)).sum();
    if (n > 3) weyl[i] = weyl_norm_at(n, R, ng.g, ric, scal[i]);
  }
  out.scalar = ScalarField(cp, std::move(scal));
  out.weyl_norm = ScalarField(cp, std::move(weyl));
  return out;
}

BoundaryGeometry boundary_geometry(const MetricField& metric, const Face& face) {
  const GridChart& chart = *metric.chart();
  if (!chart.has_face(face)) throw PreconditionError("boundary_geometry: face not found");
  const int n = chart.dim();
  const std::vector<int> tan = tangential_axes(chart, face);
  const int m = n - 1;
  const TensorDiff td(metric.tensor());

  BoundaryGeometry bg;
  bg.normal_axis = face.axis;
  const std::vector<std::size_t> nodes = chart.face_nodes(face);
  bg.second_fundamental.face = bg.mean_curvature.face = bg.induced_metric.face = bg.area_density.face = face;
  bg.second_fundamental.nodes = bg.mean_curvature.nodes = bg.induced_metric.nodes =
      bg.area_density.nodes = nodes;

  NodeGeometry ng;
  ng.n = n;
  for (std::size_t node : nodes) {
    const ReferenceFrame ref = chart.reference(node);
    ng.g = metric.at(node);
    ng.gi = ng.g.inverse();
    td.at(node, ref, ng.dg, nullptr);
    fill_christoffel(ng);
    const int c = face.axis;
    Vec nu(n);
    const double norm = std::sqrt(ng.gi(c, c));
    for (int k = 0; k < n; ++k) nu(k) = face.inward() * ng.gi(k, c) / norm;

    Mat A(m, m), gm(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int k = 0; k < n; ++k) s += ng.G1[k][tan[i]][tan[j]] * nu(k);
        A(i, j) = s;
        gm(i, j) = ng.g(tan[i], tan[j]);
      }
    A = 0.5 * (A + A.transpose()).eval();
    const Mat gmi = gm.inverse();
    bg.second_fundamental.values.push_back(A);
    bg.induced_metric.values.push_back(gm);
    bg.mean_curvature.values.push_back((gmi.cwiseProduct(A)).sum());
    bg.area_density.values.push_back(std::sqrt(gm.determinant()));
  }
  return bg;
}

double minimal_boundary_tolerance(const GridChart& chart) {
  const double h = chart.max_step();
  return 1e-6 + h * h;
}

BoundaryField second_form_norm2(const BoundaryGeometry& bg) {
  BoundaryField out;
  out.face = bg.mean_curvature.face;
  out.nodes = bg.mean_curvature.nodes;
  for (std::size_t k = 0; k < out.nodes.size(); ++k) {
    const Mat gmi = bg.induced_metric.values[k].inverse();
    const Mat& A = bg.second_fundamental.values[k];
    out.values.push_back(inner(gmi, A, A));
  }
  return out;
}

ScalarField laplacian(const MetricField& metric, const ScalarField& u) {
  require_same_chart(u.chart, metric.chart(), "laplacian");
  const GridChart& chart = *metric.chart();
  const int n = chart.dim();
  const TensorDiff td(metric.tensor());
  std::vector<double> out(chart.size());
  NodeGeometry ng;
  ng.n = n;
  for (std::size_t i = 0; i < chart.size(); ++i) {
    const ReferenceFrame ref = chart.reference(i);
    ng.g = metric.at(i);
    ng.gi = ng.g.inverse();
    td.at(i, ref, ng.dg, nullptr);
    fill_christoffel(ng);
    double du[kMaxDim], d2u;
    for (int k = 0; k < n; ++k) diff1(chart, u.values.data(), 1, i, k, &du[k]);
    double s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b) {
        diff2(chart, u.values.data(), 1, i, a, b, &d2u);
        double gam = 0.0;
        for (int k = 0; k < n; ++k) gam += ng.G2[k][a][b] * du[k];
        s += (a == b ? 1.0 : 2.0) * ng.gi(a, b) * (d2u - gam);
      }
    out[i] = s;
  }
  return ScalarField(u.chart, std::move(out));
}

static void require_positive(const ScalarField& u, const char* what) {
  for (std::size_t i = 0; i < u.values.size(); ++i)
    if (!(u.values[i] > 0.0)) {
      std::ostringstream os;
      os << what << ": conformal factor is not positive at node " << i;
      throw PreconditionError(os.str());
    }
}

ScalarField conformal_scalar_curvature(const MetricField& g, const ScalarField& scalar_g,
                                       const ScalarField& u) {
  require_positive(u, "conformal_scalar_curvature");
  const int n = g.dim();
  const double a = 4.0 * (n - 1) / (n - 2);
  const double p = static_cast<double>(n + 2) / (n - 2);
  const ScalarField lap = laplacian(g, u);
  std::vector<double> out(u.values.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::pow(u[i], -p) * (-a * lap[i] + scalar_g[i] * u[i]);
  return ScalarField(u.chart, std::move(out));
}

ScalarField conformal_scalar_curvature(const MetricField& g, const ScalarField& u) {
  require_same_chart(u.chart, g.chart(), "conformal_scalar_curvature");
  require_positive(u, "conformal_scalar_curvature");
  return conformal_scalar_curvature(g, curvature(g).scalar, u);
}

MetricField conformal_metric(const MetricField& g, const ScalarField& u) {
  require_same_chart(u.chart, g.chart(), "conformal_metric");
  require_positive(u, "conformal_metric");
  const double e = 4.0 / (g.dim() - 2);
  SymTensorField t = g.tensor();
  const int P = packed_size(g.dim());
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double f = std::pow(u[i], e);
    for (int p = 0; p < P; ++p) t.data()[i * P + p] *= f;
  }
  return MetricField(std::move(t));
}

ScalarField linearized_scalar_curvature(const MetricField& metric, const SymTensorField& h) {
  require_same_chart(h.chart(), metric.chart(), "linearized_scalar_curvature");
  const GridChart& chart = *metric.chart();
  const int n = chart.dim();
  const TensorDiff tg(metric.tensor());
  const TensorDiff th(h);
  const CurvatureBundle cb = curvature(metric);
  std::vector<double> out(chart.size());

  NodeGeometry ng;
  ng.n = n;
  Mat dh[kMaxDim], ddh[kMaxDim * kMaxDim];
  static thread_local double D[kMaxDim][kMaxDim][kMaxDim];
  static thread_local double dGam[kMaxDim][kMaxDim][kMaxDim][kMaxDim];  // d_a Gamma^m_bi
  for (std::size_t node = 0; node < chart.size(); ++node) {
    const ReferenceFrame ref = chart.reference(node);
    ng.g = metric.at(node);
    ng.gi = ng.g.inverse();
    tg.at(node, ref, ng.dg, ng.ddg);
    fill_christoffel(ng);
    th.at(node, ref, dh, ddh);
    const Mat hm = h.at(node);
    const Mat& gi = ng.gi;

    for (int b = 0; b < n; ++b)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double s = dh[b](i, j);
          for (int m = 0; m < n; ++m) s -= ng.G2[m][b][i] * hm(m, j) + ng.G2[m][b][j] * hm(i, m);
          D[b][i][j] = s;
        }
    for (int a = 0; a < n; ++a)
      for (int m = 0; m < n; ++m)
        for (int b = 0; b < n; ++b)
          for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int p = 0; p < n; ++p) {
              const double dG1 = 0.5 * (ng.ddg[a * n + b](p, i) + ng.ddg[a * n + i](p, b) -
                                        ng.ddg[a * n + p](b, i));
              double dgi = 0.0;  // d_a g^{mp}
              for (int q = 0; q < n; ++q)
                for (int r = 0; r < n; ++r) dgi -= gi(m, q) * ng.dg[a](q, r) * gi(r, p);
              s += gi(m, p) * dG1 + dgi * ng.G1[p][b][i];
            }
            dGam[a][m][b][i] = s;
          }

    double total = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) {
            const double K = gi(i, a) * gi(j, b) - gi(a, b) * gi(i, j);
            if (K == 0.0) continue;
            // d_a (nabla_b h_ij)
            double v = ddh[a * n + b](i, j);
            for (int m = 0; m < n; ++m) {
              v -= dGam[a][m][b][i] * hm(m, j) + ng.G2[m][b][i] * dh[a](m, j);
              v -= dGam[a][m][b][j] * hm(i, m) + ng.G2[m][b][j] * dh[a](i, m);
              v -= ng.G2[m][a][b] * D[m][i][j] + ng.G2[m][a][i] * D[b][m][j] +
                   ng.G2[m][a][j] * D[b][i][m];
            }
            total += K * v;
          }
    total -= inner(gi, hm, cb.ricci.at(node));
    out[node] = total;
  }
  return ScalarField(metric.chart(), std::move(out));
}

double comparison_constant(const MetricField& gbar, const MetricField& gtilde) {
  require_same_chart(gbar.chart(), gtilde.chart(), "comparison_constant");
  double q = 0.0;
  for (std::size_t i = 0; i < gbar.chart()->size(); ++i) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(gbar.at(i), gtilde.at(i), Eigen::EigenvaluesOnly);
    q = std::max(q, es.eigenvalues().maxCoeff());
  }
  return q;
}

EscobarReport escobar_conditions(const MetricField& g) {
  const GridChart& chart = *g.chart();
  const int n = chart.dim();
  EscobarReport rep;
  rep.a = n >= 6;
  const double h = chart.max_step();
  rep.weyl_threshold = 10.0 * h * h;

  const CurvatureBundle cb = curvature(g);
  rep.interior_weyl = cb.weyl_norm.max();
  rep.umbilic_defect = 0.0;
  bool umbilic = true;
  for (const Face& f : chart.faces()) {
    const BoundaryGeometry bg = boundary_geometry(g, f);
    double defect = 0.0, amax = 0.0;
    for (std::size_t k = 0; k < bg.mean_curvature.nodes.size(); ++k) {
      const Mat& A = bg.second_fundamental.values[k];
      const Mat D = A - bg.mean_curvature.values[k] / (n - 1) * bg.induced_metric.values[k];
      defect = std::max(defect, D.cwiseAbs().maxCoeff());
      amax = std::max(amax, A.cwiseAbs().maxCoeff());
      rep.boundary_weyl = std::max(rep.boundary_weyl, cb.weyl_norm[bg.mean_curvature.nodes[k]]);
    }
    rep.umbilic_defect = std::max(rep.umbilic_defect, defect / (1.0 + amax));
    if (defect > 1e-6 * (1.0 + amax)) umbilic = false;
  }
  rep.b = umbilic;
  rep.c = rep.boundary_weyl <= rep.weyl_threshold;
  rep.d = rep.interior_weyl > rep.weyl_threshold;
  rep.in_esc = !(rep.a && rep.b && rep.c && rep.d);
  return rep;
}

VariationReport variational_identity_check(const MetricPath& path, double t_step, double t) {
  if (!(t_step > 0.0)) throw PreconditionError("variational_identity_check: t_step must be positive");
  const MetricField g0 = path(t);
  const MetricField gp = path(t + t_step);
  const MetricField gm = path(t - t_step);
  require_same_chart(g0.chart(), gp.chart(), "variational_identity_check");
  require_same_chart(g0.chart(), gm.chart(), "variational_identity_check");
  const GridChart& chart = *g0.chart();
  const int n = chart.dim();

  auto total_curvature = [](const MetricField& g) { return integrate(curvature(g).scalar, g); };
  VariationReport rep;
  rep.lhs = (total_curvature(gp) - total_curvature(gm)) / (2.0 * t_step);

  SymTensorField h(g0.chart());
  for (std::size_t k = 0; k < h.data().size(); ++k)
    h.data()[k] = (gp.tensor().data()[k] - gm.tensor().data()[k]) / (2.0 * t_step);

  const CurvatureBundle cb = curvature(g0);
  std::vector<double> integrand(chart.size());
  for (std::size_t i = 0; i < chart.size(); ++i) {
    const Mat g = g0.at(i);
    const Mat gi = g.inverse();
    const Mat G = cb.ricci.at(i) - 0.5 * cb.scalar[i] * g;
    integrand[i] = inner(gi, G, h.at(i));
  }
  rep.interior_term = -integrate(ScalarField(g0.chart(), std::move(integrand)), g0);

  for (const Face& f : chart.faces()) {
    const BoundaryGeometry b0 = boundary_geometry(g0, f);
    const BoundaryGeometry bp = boundary_geometry(gp, f);
    const BoundaryGeometry bm = boundary_geometry(gm, f);
    const std::vector<int> tan = tangential_axes(chart, f);
    BoundaryField term;
    term.face = f;
    term.nodes = b0.mean_curvature.nodes;
    double hmax = 0.0, defect = 0.0;
    for (std::size_t k = 0; k < term.nodes.size(); ++k) {
      const Mat hfull = h.at(term.nodes[k]);
      Mat hM(n - 1, n - 1);
      for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n - 1; ++j) hM(i, j) = hfull(tan[i], tan[j]);
      const Mat& gM = b0.induced_metric.values[k];
      const double fval = (gM.inverse() * hM).trace() / (n - 1);
      defect = std::max(defect, (hM - fval * gM).cwiseAbs().maxCoeff());
      hmax = std::max(hmax, hM.cwiseAbs().maxCoeff());
      const double dH = (bp.mean_curvature.values[k] - bm.mean_curvature.values[k]) / (2.0 * t_step);
      term.values.push_back(2.0 * dH + fval * b0.mean_curvature.values[k]);
    }
    rep.conformal_defect = std::max(rep.conformal_defect, defect / (1.0 + hmax));
    rep.boundary_term -= integrate(term, g0);
  }
  if (rep.conformal_defect > 1e-6) {
    std::ostringstream os;
    os << "variational_identity_check: boundary variation is not conformal (defect "
       << rep.conformal_defect << ")";
    throw PreconditionError(os.str());
  }
  rep.rhs = rep.interior_term + rep.boundary_term;
  rep.residual = std::abs(rep.lhs - rep.rhs);
  return rep;
}

}  // namespace ryam
