#include "ryam/experiments.hpp"

#include "descriptors.hpp"
#include "ryam/constructions.hpp"
#include "ryam/geometry.hpp"
#include "ryam/models.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

namespace ryam {

namespace {

using detail::Json;
using OJson = nlohmann::ordered_json;

constexpr std::array<std::pair<Experiment, std::string_view>, 10> kNames{{
    {Experiment::Curvature, "curvature"},
    {Experiment::Cutoff, "cutoff"},
    {Experiment::ApproxStudy, "approx-study"},
    {Experiment::Variation, "variation"},
    {Experiment::Glue, "glue"},
    {Experiment::Eigen, "eigen"},
    {Experiment::Yamabe, "yamabe"},
    {Experiment::Sandwich, "sandwich"},
    {Experiment::DoubleCheck, "double-check"},
    {Experiment::PscPath, "psc-path"},
}};

std::string cell(double x) { return format_double(x); }
std::string cell(int x) { return std::to_string(x); }
std::string cell(bool b) { return b ? "true" : "false"; }

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string render() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) out += ',';
        out += r[i];
      }
      out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
  }
};

OJson verdict_json(const Verdict& v) {
  OJson j;
  j["name"] = v.name;
  j["lhs"] = v.lhs;
  j["rhs"] = v.rhs;
  j["tolerance"] = v.tolerance;
  j["applicable"] = v.applicable;
  j["holds"] = v.holds;
  return j;
}

// Everything one run reads and writes.
struct Context {
  Json cfg;
  Json tol_cfg = Json::object();
  std::uint64_t seed = 0;
  Table table;
  OJson summary = OJson::object();
  OJson tolerances = OJson::object();
  OJson grid = OJson::object();
  std::vector<Verdict> verdicts;

  double tol(const char* key, double fallback) {
    const double v = detail::number_at(tol_cfg, key, fallback);
    tolerances[key] = v;
    return v;
  }
  bool has_tol(const char* key) const { return tol_cfg.contains(key); }
};

Json manifold_of(const Context& ctx) {
  Json m = detail::object_at(ctx.cfg, "manifold");
  if (!m.contains("cap_angle") && ctx.cfg.contains("metric") &&
      detail::torpedo_plateau(ctx.cfg["metric"]) > 0.0)
    m["cap_angle"] = detail::torpedo_cap_angle(ctx.cfg["metric"]);
  return m;
}

ChartPtr make_chart(Context& ctx, double refine = 1.0) {
  const Json m = manifold_of(ctx);
  ChartPtr chart;
  try {
    chart = build_chart(detail::chart_spec(m, refine));
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid manifold: ") + e.what());
  }
  if (refine == 1.0) {
    ctx.grid["kind"] = detail::chart_kind_name(chart->kind());
    ctx.grid["dim"] = chart->dim();
    OJson res = OJson::array();
    for (const Axis& a : chart->axes()) res.push_back(a.count);
    ctx.grid["resolution"] = res;
    ctx.grid["max_step"] = chart->max_step();
  }
  return chart;
}

MetricField make_metric(const Context& ctx, const ChartPtr& chart, const char* key = "metric") {
  try {
    return detail::metric_from(detail::object_at(ctx.cfg, key), chart, ctx.seed);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("invalid metric: ") + e.what());
  }
}

std::vector<double> deltas_of(const Context& ctx) {
  const std::vector<double> d = detail::numbers_at(ctx.cfg, "deltas");
  if (d.empty()) throw ConfigError("'deltas' must be a non-empty list");
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0 && d[i] <= 1.0)) throw ConfigError("every delta must lie in (0, 1]");
    if (i > 0 && !(d[i] < d[i - 1])) throw ConfigError("'deltas' must be strictly decreasing");
  }
  return d;
}

std::vector<double> refinements_of(const Context& ctx) {
  std::vector<double> r = detail::numbers_at(ctx.cfg, "refinements");
  if (r.empty()) r = {1.0};
  for (double x : r)
    if (!(x > 0.0)) throw ConfigError("refinement factors must be positive");
  return r;
}

std::size_t base_level(const std::vector<double>& refine) {
  const auto it = std::find(refine.begin(), refine.end(), 1.0);
  return it == refine.end() ? 0 : static_cast<std::size_t>(it - refine.begin());
}

YamabeOptions yamabe_options(const Context& ctx) {
  YamabeOptions opt;
  if (!ctx.cfg.contains("yamabe")) return opt;
  const Json& y = detail::object_at(ctx.cfg, "yamabe");
  opt.u_min = detail::number_at(y, "u_min", opt.u_min);
  opt.tolerance = detail::number_at(y, "tolerance", opt.tolerance);
  opt.max_iterations = detail::integer_at(y, "max_iterations", opt.max_iterations);
  if (!(opt.u_min > 0.0 && opt.tolerance > 0.0 && opt.max_iterations > 0))
    throw ConfigError("yamabe options must be positive");
  return opt;
}

template <class Fn>
void parallel_for(int count, Fn&& fn) {
  const int threads = sweep_threads(count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next++) < count;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (std::thread& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::string tagged(const char* name, const char* key, double value) {
  return std::string(name) + "[" + key + "=" + format_double(value) + "]";
}

// --- experiments -----------------------------------------------------------------

void run_curvature(Context& ctx) {
  const std::vector<double> refine = refinements_of(ctx);
  const bool has_target = ctx.cfg.contains("target_scalar");
  const double target = detail::number_at(ctx.cfg, "target_scalar", 0.0);
  ctx.table.header = {"refine", "h", "nodes", "min_R", "max_R", "max_err"};
  std::vector<double> hs, errs;
  for (double f : refine) {
    const ChartPtr chart = make_chart(ctx, f);
    const ScalarField r = curvature(make_metric(ctx, chart)).scalar;
    double err = 0.0;
    for (double v : r.values) err = std::max(err, std::abs(v - target));
    hs.push_back(chart->max_step());
    errs.push_back(err);
    ctx.table.rows.push_back({cell(f), cell(chart->max_step()), std::to_string(chart->size()),
                              cell(r.min()), cell(r.max()),
                              has_target ? cell(err) : std::string("nan")});
  }
  if (!has_target) return;
  const std::size_t base = base_level(refine);
  const double rhs = ctx.tol("absolute", 1e-8) + ctx.tol("relative", 0.02) * std::abs(target);
  ctx.verdicts.push_back(make_verdict("accuracy", errs[base], rhs, 0.0));
  if (refine.size() >= 3) {
    OJson orders = OJson::array();
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < refine.size(); ++k) {
      const double p = std::log(errs[k] / errs[k + 1]) / std::log(hs[k] / hs[k + 1]);
      orders.push_back(p);
      worst = std::min(worst, std::isfinite(p) ? p : -std::numeric_limits<double>::infinity());
    }
    ctx.summary["observed_orders"] = orders;
    ctx.verdicts.push_back(make_verdict("order", ctx.tol("min_order", 1.7), worst, 0.0));
  }
}

void run_cutoff(Context& ctx) {
  const std::vector<double> deltas = deltas_of(ctx);
  const int samples = detail::integer_at(ctx.cfg, "samples", 10000);
  if (samples < 10) throw ConfigError("'samples' must be at least 10");
  const double eps_tol = ctx.tol("eps", 1e-12);
  std::vector<CutoffAudit> audits(deltas.size());
  std::vector<double> eps(deltas.size());
  parallel_for(static_cast<int>(deltas.size()), [&](int i) {
    const CutoffFunction w = kobayashi_cutoff(deltas[i]);
    eps[i] = w.eps();
    audits[i] = audit_cutoff(w, samples);
  });
  ctx.table.header = {"delta", "eps", "eps_formula", "max_t_dw", "max_t_d2w", "max_t2_d2w",
                      "plateaus", "monotone", "in_range"};
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double d = deltas[i], formula = 0.25 * std::exp(-1.0 / d);
    const CutoffAudit& a = audits[i];
    ctx.table.rows.push_back({cell(d), cell(eps[i]), cell(formula), cell(a.max_t_d1),
                              cell(a.max_t_d2), cell(a.max_t2_d2), cell(a.plateaus),
                              cell(a.monotone), cell(a.in_range)});
    ctx.verdicts.push_back(make_verdict(tagged("eps", "delta", d), std::abs(eps[i] - formula), 0.0, eps_tol));
    const int defects = !a.plateaus + !a.monotone + !a.in_range;
    ctx.verdicts.push_back(make_verdict(tagged("shape", "delta", d), defects, 0.0, 0.0));
    ctx.verdicts.push_back(make_verdict(tagged("t_dw", "delta", d), a.max_t_d1, d, 0.0));
    ctx.verdicts.push_back(make_verdict(tagged("t_d2w", "delta", d), a.max_t_d2, d, 0.0));
  }
}

// Largest rise of xs over the sweep that is not below 3 * floor.
double monotone_violation(const std::vector<double>& xs, const std::vector<double>& floor) {
  double worst = 0.0;
  for (std::size_t k = 1; k < xs.size(); ++k)
    worst = std::max(worst, xs[k] - std::max(xs[k - 1], 3.0 * floor[k]));
  return worst;
}

void run_approx(Context& ctx) {
  const std::vector<double> deltas = deltas_of(ctx);
  const ChartPtr chart = make_chart(ctx);
  const MetricField gbar = make_metric(ctx, chart);
  const Face face = detail::face_from(ctx.cfg, *chart);
  const ScalarField rbar = curvature(gbar).scalar;
  const std::size_t m = deltas.size();
  std::vector<double> eps(m), dg(m), dr(m), hmax(m), prod(m);
  parallel_for(static_cast<int>(m), [&](int i) {
    const Approximation ap = approximation_family(gbar, deltas[i], face);
    eps[i] = ap.eps;
    dg[i] = max_abs_diff(ap.metric.tensor().data(), gbar.tensor().data());
    dr[i] = max_abs_diff(curvature(ap.metric).scalar.values, rbar.values);
    double h = 0.0;
    for (double v : boundary_geometry(ap.metric, face).mean_curvature.values)
      h = std::max(h, std::abs(v));
    hmax[i] = h;
    prod[i] = conformal_product_defect(ap.metric, face, ap.eps, chart->axis(face.axis).count);
  });

  std::vector<double> floor(m, 0.0);
  if (ctx.tol_cfg.contains("noise_floor") && ctx.tol_cfg["noise_floor"].is_array()) {
    floor = detail::numbers_at(ctx.tol_cfg, "noise_floor");
    if (floor.size() != m) throw ConfigError("'noise_floor' needs one value per delta");
    ctx.tolerances["noise_floor"] = floor;
  } else {
    std::fill(floor.begin(), floor.end(), ctx.tol("noise_floor", 0.0));
  }
  const double h_tol = ctx.tol("H", 1e-6), p_tol = ctx.tol("product", 1e-10);

  ctx.table.header = {"delta", "eps", "sup_metric_diff", "sup_R_diff", "max_abs_H", "product_defect"};
  for (std::size_t i = 0; i < m; ++i) {
    ctx.table.rows.push_back({cell(deltas[i]), cell(eps[i]), cell(dg[i]), cell(dr[i]),
                              cell(hmax[i]), cell(prod[i])});
    ctx.verdicts.push_back(make_verdict(tagged("H", "delta", deltas[i]), hmax[i], 0.0, h_tol));
    ctx.verdicts.push_back(make_verdict(tagged("product", "delta", deltas[i]), prod[i], 0.0, p_tol));
  }
  ctx.verdicts.push_back(make_verdict("monotone_metric", monotone_violation(dg, floor), 0.0, 0.0));
  ctx.verdicts.push_back(make_verdict("monotone_R", monotone_violation(dr, floor), 0.0, 0.0));
}

void run_variation(Context& ctx) {
  const std::vector<double> refine = refinements_of(ctx);
  const double t = detail::number_at(ctx.cfg, "t", 0.0);
  const double dt = detail::number_at(ctx.cfg, "t_step", 1e-4);
  if (!(dt > 0.0)) throw ConfigError("'t_step' must be positive");
  const double rel = ctx.tol("relative", 1e-2);
  ctx.table.header = {"refine", "h", "lhs", "rhs", "interior", "boundary", "residual", "bound"};
  std::vector<double> res;
  double base_lhs = 0.0, base_res = 0.0;
  const std::size_t base = base_level(refine);
  for (std::size_t k = 0; k < refine.size(); ++k) {
    const ChartPtr chart = make_chart(ctx, refine[k]);
    const MetricField g0 = make_metric(ctx, chart);
    const ScalarField s = detail::scalar_from(detail::object_at(ctx.cfg, "s"), chart);
    if (k == base) ctx.summary["neumann_defect_s"] = neumann_defect(*chart, Eigen::Map<const Eigen::VectorXd>(s.values.data(), s.values.size()));
    const MetricPath path = [&](double tau) {
      return conformal_metric(g0, make_scalar(chart, [&](std::size_t i) { return 1.0 + tau * s[i]; }));
    };
    const VariationReport r = variational_identity_check(path, dt, t);
    const double bound = rel * std::max(std::abs(r.lhs), 1.0);
    ctx.table.rows.push_back({cell(refine[k]), cell(chart->max_step()), cell(r.lhs), cell(r.rhs),
                              cell(r.interior_term), cell(r.boundary_term), cell(r.residual), cell(bound)});
    res.push_back(r.residual);
    if (k == base) base_lhs = r.lhs, base_res = r.residual;
  }
  ctx.verdicts.push_back(make_verdict("identity", base_res, rel * std::max(std::abs(base_lhs), 1.0), 0.0));
  if (res.size() >= 2) {
    double ratio = 0.0;
    for (std::size_t k = 1; k < res.size(); ++k) ratio = std::max(ratio, res[k] / res[k - 1]);
    ctx.verdicts.push_back(make_verdict("shrinks", ratio, 1.0, 0.0));
  }
}

void run_glue(Context& ctx) {
  const ChartPtr chart = make_chart(ctx);
  const Json& d1 = detail::object_at(ctx.cfg, "metric");
  const Json& d2 = ctx.cfg.contains("metric2") ? detail::object_at(ctx.cfg, "metric2") : d1;
  const double a1 = detail::torpedo_plateau(d1), a2 = detail::torpedo_plateau(d2);
  if (a1 <= 0.0 || a2 <= 0.0) throw ConfigError("glue needs torpedo metrics");
  const MetricField w1 = make_metric(ctx, chart, "metric");
  const MetricField w2 = ctx.cfg.contains("metric2") ? make_metric(ctx, chart, "metric2") : w1;
  const Face face = detail::face_from(ctx.cfg, *chart);
  const double step = chart->axis(face.axis).step;
  const double delta = detail::integer_at(ctx.cfg, "delta_steps", 2) * step;
  const double ell = detail::integer_at(ctx.cfg, "ell_steps", 8) * step;

  const BoundaryGeometry bg = boundary_geometry(w1, face);
  const std::vector<std::size_t> nodes = chart->face_nodes(face);
  const BoundaryField f1{face, nodes, std::vector<double>(nodes.size(), detail::torpedo_f(d1))};
  const BoundaryField f2{face, nodes, std::vector<double>(nodes.size(), detail::torpedo_f(d2))};
  const GlueResult x = glue_metrics(GluePiece{&w1, face, a1}, GluePiece{&w2, face, a2},
                                    bg.induced_metric, f1, f2, ell, delta);
  const GluingBound gb = gluing_eigenvalue_bound(x, w1, w2);

  const GridChart& xc = *x.metric.chart();
  const ScalarField r = curvature(x.metric).scalar;
  double min_cyl = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xc.size(); ++i) {
    const int layer = xc.index_along(i, xc.collar_axis());
    if (layer >= x.w1_last && layer <= x.w2_first) min_cyl = std::min(min_cyl, r[i]);
  }
  ctx.summary["delta"] = delta;
  ctx.summary["ell"] = ell;
  ctx.table.header = {"quantity", "value"};
  const std::pair<const char*, double> rows[] = {
      {"lambda_x", gb.lambda_x},   {"lambda_w1", gb.lambda_w1}, {"lambda_w2", gb.lambda_w2},
      {"lambda_cyl", gb.lambda_cyl}, {"slack", gb.slack},      {"min_R_cylinder", min_cyl},
  };
  for (const auto& [k, v] : rows) ctx.table.rows.push_back({k, cell(v)});
  ctx.verdicts.push_back(gb.bound);
  ctx.verdicts.push_back(gb.positive);
  ctx.verdicts.push_back(make_verdict("cylinder_psc", -min_cyl, 0.0, 0.0));
}

void run_eigen(Context& ctx) {
  const ChartPtr chart = make_chart(ctx);
  const YamabeOperator op = yamabe_operator(make_metric(ctx, chart));
  const Eigenpair e = neumann_first_eigenvalue(op);
  ctx.table.header = {"method", "value", "iterations", "residual"};
  ctx.table.rows.push_back({"inverse-iteration", cell(e.value), cell(e.iterations), cell(e.residual)});
  if (op.K.rows() <= 2000) {
    const double dense = dense_first_eigenvalue(op);
    ctx.table.rows.push_back({"dense", cell(dense), "0", "0"});
    ctx.verdicts.push_back(make_verdict("dense_agreement", std::abs(e.value - dense), 0.0, ctx.tol("absolute", 1e-8)));
  }
}

void yamabe_summary(Context& ctx, const YamabeReport& r) {
  ctx.summary["functional_value"] = r.functional_value;
  ctx.summary["eigenvalue"] = r.eigenvalue;
  ctx.summary["yamabe_constant_upper_estimate"] = r.yamabe_constant_estimate;
  ctx.summary["iterations"] = r.iterations;
  ctx.summary["residual"] = r.residual;
  ctx.summary["converged"] = r.converged;
}

void run_yamabe(Context& ctx) {
  const ChartPtr chart = make_chart(ctx);
  const YamabeReport r = relative_yamabe_constant(make_metric(ctx, chart), yamabe_options(ctx));
  ctx.table.header = {"iteration", "quotient"};
  for (std::size_t k = 0; k < r.history.size(); ++k)
    ctx.table.rows.push_back({std::to_string(k), cell(r.history[k])});
  yamabe_summary(ctx, r);
  ctx.verdicts = r.verdicts;
}

void run_sandwich(Context& ctx) {
  const ChartPtr chart = make_chart(ctx);
  const MetricField g = make_metric(ctx, chart);
  const YamabeReport r = relative_yamabe_constant(g, yamabe_options(ctx));
  yamabe_summary(ctx, r);
  ctx.verdicts = r.verdicts;
  for (const Verdict& v : yamabe_sandwich(g, r.yamabe_constant_estimate)) ctx.verdicts.push_back(v);
  ctx.table.header = {"name", "lhs", "rhs", "tolerance", "applicable", "holds"};
  for (const Verdict& v : ctx.verdicts)
    ctx.table.rows.push_back({v.name, cell(v.lhs), cell(v.rhs), cell(v.tolerance), cell(v.applicable), cell(v.holds)});
}

void run_double(Context& ctx) {
  const std::vector<double> deltas = deltas_of(ctx);
  const ChartPtr chart = make_chart(ctx);
  const MetricField w = make_metric(ctx, chart);
  const Face face = detail::face_from(ctx.cfg, *chart);
  const DoublingReport r = doubling_inequality_check(w, face, deltas, ctx.tol("slack", 1e-3), yamabe_options(ctx));
  ctx.table.header = {"delta", "eps", "c0_distance", "y_double", "lower_double"};
  for (const DoublingStep& s : r.sweep)
    ctx.table.rows.push_back({cell(s.delta), cell(s.eps), cell(s.c0_distance), cell(s.y_double), cell(s.lower_double)});
  ctx.summary["y_piece"] = r.y_piece;
  ctx.summary["scaled_piece"] = r.scaled_piece;
  ctx.summary["observed_k"] = r.observed_k;
  ctx.verdicts.push_back(r.verdict);
  if (ctx.has_tol("gap") && !r.sweep.empty()) {
    const double gap = std::abs(r.sweep.back().y_double - r.scaled_piece);
    ctx.verdicts.push_back(make_verdict("near_equality", gap, ctx.tol("gap", 0.02) * std::abs(r.scaled_piece), 0.0));
  }
}

void run_psc(Context& ctx) {
  const ChartPtr chart = make_chart(ctx);
  const MetricField g0 = make_metric(ctx, chart);
  const ScalarField u = detail::scalar_from(detail::object_at(ctx.cfg, "u"), chart);
  for (double v : u.values)
    if (!(v > 0.0)) throw ConfigError("'u' must be positive at every node");
  std::vector<double> ts = detail::numbers_at(ctx.cfg, "ts");
  if (ts.empty())
    for (int k = 0; k <= 10; ++k) ts.push_back(k / 10.0);
  for (double t : ts)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("every t must lie in [0, 1]");
  std::vector<double> min_r(ts.size());
  parallel_for(static_cast<int>(ts.size()), [&](int i) { min_r[i] = psc_linear_path(g0, u, ts[i]).min_scalar; });
  ctx.table.header = {"t", "min_R"};
  for (std::size_t i = 0; i < ts.size(); ++i) {
    ctx.table.rows.push_back({cell(ts[i]), cell(min_r[i])});
    ctx.verdicts.push_back(make_verdict(tagged("psc", "t", ts[i]), -min_r[i], 0.0, 0.0));
  }
}

bool valid_name(const std::string& s) {
  if (s.empty() || s.size() > 128 || s[0] == '.') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '_' || c == '.';
  });
}

}  // namespace

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (const auto& [e, n] : kNames)
    if (n == name) return e;
  return std::nullopt;
}

std::string_view experiment_name(Experiment e) {
  for (const auto& [k, n] : kNames)
    if (k == e) return n;
  return "unknown";
}

bool RunOutput::all_hold() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const Verdict& v) { return !v.applicable || v.holds; });
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string config_hash(const std::string& config_text) {
  const std::string canon = Json::parse(config_text).dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = hex[h & 15];
  return out;
}

int sweep_threads(int tasks) {
  int n = 0;
  if (const char* env = std::getenv("RYAM_THREADS")) {
    const std::string s(env);
    int v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec == std::errc() && r.ptr == s.data() + s.size() && v > 0) n = v;
  }
  if (n == 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min(n, tasks));
}

RunOutput run_experiment(Experiment e, const std::string& config_text) {
  Context ctx;
  try {
    ctx.cfg = Json::parse(config_text);
  } catch (const Json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!ctx.cfg.is_object()) throw ConfigError("config must be a JSON object");
  if (ctx.cfg.contains("experiment")) {
    const Json& x = ctx.cfg["experiment"];
    if (!x.is_string() || x.get<std::string>() != experiment_name(e))
      throw ConfigError("config 'experiment' does not match the command line");
  }
  RunOutput out;
  out.name = std::string(experiment_name(e));
  if (ctx.cfg.contains("name")) {
    if (!ctx.cfg["name"].is_string() || !valid_name(ctx.cfg["name"].get<std::string>()))
      throw ConfigError("'name' must be a plain file name");
    out.name = ctx.cfg["name"].get<std::string>();
  }
  ctx.seed = detail::seed_at(ctx.cfg, "seed", 0);
  if (ctx.cfg.contains("tolerances")) ctx.tol_cfg = detail::object_at(ctx.cfg, "tolerances");

  switch (e) {
    case Experiment::Curvature: run_curvature(ctx); break;
    case Experiment::Cutoff: run_cutoff(ctx); break;
    case Experiment::ApproxStudy: run_approx(ctx); break;
    case Experiment::Variation: run_variation(ctx); break;
    case Experiment::Glue: run_glue(ctx); break;
    case Experiment::Eigen: run_eigen(ctx); break;
    case Experiment::Yamabe: run_yamabe(ctx); break;
    case Experiment::Sandwich: run_sandwich(ctx); break;
    case Experiment::DoubleCheck: run_double(ctx); break;
    case Experiment::PscPath: run_psc(ctx); break;
  }

  out.verdicts = std::move(ctx.verdicts);
  out.csv = ctx.table.render();
  OJson j;
  j["experiment"] = std::string(experiment_name(e));
  j["name"] = out.name;
  j["config_hash"] = config_hash(config_text);
  j["seed"] = ctx.seed;
  j["grid"] = ctx.grid;
  j["tolerances"] = ctx.tolerances;
  j["summary"] = ctx.summary;
  OJson vs = OJson::array();
  for (const Verdict& v : out.verdicts) vs.push_back(verdict_json(v));
  j["verdicts"] = vs;
  j["all_hold"] = out.all_hold();
  out.json = j.dump(2) + "\n";
  return out;
}

}  // namespace ryam
