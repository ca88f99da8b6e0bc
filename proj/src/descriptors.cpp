#include "descriptors.hpp"

#include "ryam/geometry.hpp"
#include "ryam/models.hpp"

#include <cmath>
#include <numbers>

namespace ryam::detail {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

const Json* find(const Json& obj, const char* key) {
  if (!obj.is_object()) fail(std::string("expected an object around '") + key + "'");
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const Json& v, const std::string& what) {
  if (!v.is_number()) fail("'" + what + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail("'" + what + "' must be finite");
  return x;
}

int as_int(const Json& v, const std::string& what) {
  if (!v.is_number_integer()) fail("'" + what + "' must be an integer");
  return v.get<int>();
}

std::vector<int> ints_at(const Json& obj, const char* key) {
  const Json* v = find(obj, key);
  if (!v || !v->is_array()) fail(std::string("'") + key + "' must be a list of integers");
  std::vector<int> out;
  for (const Json& e : *v) out.push_back(as_int(e, key));
  return out;
}

// Scale a node count: intervals when `intervals` (count - 1 grows), nodes otherwise.
int refine_count(int count, double refine, bool intervals) {
  const double base = intervals ? count - 1 : count;
  const double scaled = base * refine;
  const double r = std::round(scaled);
  if (std::abs(scaled - r) > 1e-9 || r < 1) fail("refinement factor does not give an integer grid");
  return static_cast<int>(r) + (intervals ? 1 : 0);
}

struct Factor {
  int axis = 0;
  enum class Fn { Cos, Sin, Poly } fn = Fn::Cos;
  double freq = 0.0, phase = 0.0;
  std::vector<double> coeffs;
  bool psi = false;
};

Factor parse_factor(const Json& j, const GridChart& chart) {
  Factor f;
  const Json* axis = find(j, "axis");
  if (!axis) fail("u-expression factor needs 'axis'");
  f.axis = as_int(*axis, "axis");
  if (f.axis < 0 || f.axis >= chart.dim()) fail("u-expression factor axis out of range");
  const Json* fn = find(j, "fn");
  if (!fn || !fn->is_string()) fail("u-expression factor needs 'fn'");
  const std::string name = fn->get<std::string>();
  if (const Json* var = find(j, "var")) {
    if (!var->is_string()) fail("'var' must be \"x\" or \"psi\"");
    const std::string v = var->get<std::string>();
    if (v == "psi") {
      if (chart.kind() != ChartKind::SphereCap || f.axis != chart.collar_axis())
        fail("'psi' is only defined on the collar axis of a sphere-cap");
      f.psi = true;
    } else if (v != "x") {
      fail("'var' must be \"x\" or \"psi\"");
    }
  }
  if (name == "poly") {
    f.fn = Factor::Fn::Poly;
    f.coeffs = numbers_at(j, "coeffs");
    if (f.coeffs.empty()) fail("'coeffs' must not be empty");
    if (chart.axis(f.axis).periodic) fail("polynomial factors are not allowed on periodic axes");
    return f;
  }
  if (name == "cos") f.fn = Factor::Fn::Cos;
  else if (name == "sin") f.fn = Factor::Fn::Sin;
  else fail("unknown u-expression function '" + name + "'");
  f.freq = required_number(j, "freq");
  f.phase = number_at(j, "phase", 0.0);
  const Axis& ax = chart.axis(f.axis);
  if (ax.periodic) {
    const double cycles = f.freq * ax.count * ax.step / (2.0 * std::numbers::pi);
    if (std::abs(cycles - std::round(cycles)) > 1e-9)
      fail("frequency on a periodic axis must be a multiple of 2 pi / period");
  }
  return f;
}

double eval_factor(const Factor& f, const GridChart& chart, std::size_t node) {
  double x = chart.coord(node, f.axis);
  if (f.psi) x = chart.cap_angle() - x;
  switch (f.fn) {
    case Factor::Fn::Cos: return std::cos(f.freq * x + f.phase);
    case Factor::Fn::Sin: return std::sin(f.freq * x + f.phase);
    case Factor::Fn::Poly: {
      double v = 0.0;
      for (auto it = f.coeffs.rbegin(); it != f.coeffs.rend(); ++it) v = v * x + *it;
      return v;
    }
  }
  return 0.0;
}

std::string type_of(const Json& desc) {
  const Json* t = find(desc, "type");
  if (!t || !t->is_string()) fail("metric descriptor needs a string 'type'");
  return t->get<std::string>();
}

}  // namespace

double number_at(const Json& obj, const char* key, double fallback) {
  const Json* v = find(obj, key);
  return v ? as_number(*v, key) : fallback;
}

double required_number(const Json& obj, const char* key) {
  const Json* v = find(obj, key);
  if (!v) fail(std::string("missing '") + key + "'");
  return as_number(*v, key);
}

int integer_at(const Json& obj, const char* key, int fallback) {
  const Json* v = find(obj, key);
  return v ? as_int(*v, key) : fallback;
}

std::uint64_t seed_at(const Json& obj, const char* key, std::uint64_t fallback) {
  const Json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0))
    fail(std::string("'") + key + "' must be a non-negative integer");
  return v->get<std::uint64_t>();
}

std::vector<double> numbers_at(const Json& obj, const char* key) {
  const Json* v = find(obj, key);
  if (!v) return {};
  if (!v->is_array()) fail(std::string("'") + key + "' must be a list of numbers");
  std::vector<double> out;
  for (const Json& e : *v) out.push_back(as_number(e, key));
  return out;
}

const Json& object_at(const Json& obj, const char* key) {
  const Json* v = find(obj, key);
  if (!v || !v->is_object()) fail(std::string("'") + key + "' must be an object");
  return *v;
}

ChartSpec chart_spec(const Json& m, double refine) {
  ChartSpec spec;
  const Json* kind = find(m, "kind");
  if (!kind || !kind->is_string()) fail("manifold needs a string 'kind'");
  const std::string k = kind->get<std::string>();
  if (k == "torus-block") spec.kind = ChartKind::TorusBlock;
  else if (k == "sphere-cap") spec.kind = ChartKind::SphereCap;
  else if (k == "cylinder") spec.kind = ChartKind::Cylinder;
  else fail("unknown manifold kind '" + k + "'");
  spec.dim = integer_at(m, "dim", 3);
  if (spec.dim < 3 || spec.dim > kMaxDim) fail("manifold dim out of range");
  spec.extents = ints_at(m, "resolution");
  if (static_cast<int>(spec.extents.size()) != spec.dim)
    fail("'resolution' must list one count per axis");
  for (int e : spec.extents)
    if (e < 1) fail("'resolution' counts must be positive");
  const int c = spec.dim - 1;
  for (int a = 0; a < spec.dim; ++a)
    spec.extents[a] = refine_count(spec.extents[a], refine, a == c && spec.kind != ChartKind::SphereCap);
  spec.periods = numbers_at(m, "periods");
  if (!spec.periods.empty() && static_cast<int>(spec.periods.size()) != spec.dim - 1)
    fail("'periods' must list one period per periodic axis");
  spec.length = number_at(m, "length", 1.0);
  spec.cap_angle = number_at(m, "cap_angle", std::numbers::pi / 2);
  return spec;
}

std::string chart_kind_name(ChartKind k) {
  switch (k) {
    case ChartKind::TorusBlock: return "torus-block";
    case ChartKind::SphereCap: return "sphere-cap";
    case ChartKind::Cylinder: return "cylinder";
  }
  return "unknown";
}

MetricField metric_from(const Json& desc, const ChartPtr& chart, std::uint64_t seed) {
  const std::string type = type_of(desc);
  if (type == "flat") {
    if (chart->kind() != ChartKind::TorusBlock) fail("'flat' needs a torus-block manifold");
    return standard_metric(chart);
  }
  if (type == "round-cap") {
    if (chart->kind() != ChartKind::SphereCap) fail("'round-cap' needs a sphere-cap manifold");
    return standard_metric(chart);
  }
  if (type == "standard") return standard_metric(chart);
  if (type == "collar") {
    if (chart->kind() != ChartKind::TorusBlock) fail("'collar' needs a torus-block manifold");
    return traceless_collar_block(chart, required_number(desc, "a"));
  }
  if (type == "conformal") {
    const MetricField base = metric_from(object_at(desc, "base"), chart, seed);
    const ScalarField u = scalar_from(object_at(desc, "u"), chart);
    for (double v : u.values)
      if (!(v > 0.0)) fail("conformal factor must be positive at every node");
    return conformal_metric(base, u);
  }
  if (type == "constant-R") {
    const double r = required_number(desc, "scalar");
    if (!(r < 0.0)) fail("'constant-R' supports negative scalar curvature only");
    if (chart->kind() != ChartKind::TorusBlock || chart->dim() != 3)
      fail("'constant-R' needs a 3-dimensional torus-block manifold");
    return sol_block(chart, std::sqrt(-0.5 * r));
  }
  if (type == "random") {
    if (chart->kind() != ChartKind::TorusBlock) fail("'random' needs a torus-block manifold");
    const double amp = number_at(desc, "amplitude", 0.1);
    if (!(amp >= 0.0 && amp * chart->dim() < 1.0)) fail("'amplitude' must lie in [0, 1/dim)");
    return random_metric(chart, seed_at(desc, "seed", seed), amp);
  }
  if (type == "torpedo") {
    if (chart->kind() != ChartKind::SphereCap || chart->dim() != 3)
      fail("'torpedo' needs a 3-dimensional sphere-cap manifold");
    const double plateau = required_number(desc, "plateau"), ramp = required_number(desc, "ramp");
    if (!(plateau > 0.0 && ramp > 0.0)) fail("torpedo plateau and ramp must be positive");
    if (std::abs(chart->cap_angle() - torpedo_length(plateau, ramp)) > 1e-12)
      fail("sphere-cap cap_angle must equal plateau + ramp/2 + pi/2 for a torpedo");
    return torpedo_cap(chart, plateau, ramp, required_number(desc, "f"));
  }
  fail("unknown metric type '" + type + "'");
}

ScalarField scalar_from(const Json& expr, const ChartPtr& chart) {
  const double constant = number_at(expr, "constant", 0.0);
  struct Term {
    double coeff;
    std::vector<Factor> factors;
  };
  std::vector<Term> terms;
  if (const Json* list = find(expr, "terms")) {
    if (!list->is_array()) fail("'terms' must be a list");
    for (const Json& t : *list) {
      Term term{required_number(t, "coeff"), {}};
      const Json* fs = find(t, "factors");
      if (fs) {
        if (!fs->is_array()) fail("'factors' must be a list");
        for (const Json& f : *fs) term.factors.push_back(parse_factor(f, *chart));
      }
      terms.push_back(std::move(term));
    }
  }
  return make_scalar(chart, [&](std::size_t node) {
    double v = constant;
    for (const Term& t : terms) {
      double p = t.coeff;
      for (const Factor& f : t.factors) p *= eval_factor(f, *chart, node);
      v += p;
    }
    return v;
  });
}

Face face_from(const Json& cfg, const GridChart& chart) {
  const Json* f = find(cfg, "face");
  if (!f) {
    if (chart.faces().empty()) fail("manifold has no boundary face");
    return chart.faces().front();
  }
  if (!f->is_array() || f->size() != 2) fail("'face' must be [axis, side]");
  const Face face{as_int((*f)[0], "face"), as_int((*f)[1], "face")};
  if (!chart.has_face(face)) fail("'face' is not a boundary face of the manifold");
  return face;
}

double torpedo_plateau(const Json& desc) {
  if (!desc.is_object() || type_of(desc) != "torpedo") return -1.0;
  return required_number(desc, "plateau");
}

double torpedo_f(const Json& desc) { return required_number(desc, "f"); }

double torpedo_cap_angle(const Json& desc) {
  return torpedo_length(required_number(desc, "plateau"), required_number(desc, "ramp"));
}

}  // namespace ryam::detail
