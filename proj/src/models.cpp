#include "ryam/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace ryam {

namespace {

// Antiderivatives of smoothstep5 and y * smoothstep5 on [0, 1], zero at 0.
double step_int(double y) { return y * y * y * y * (y * y - 3.0 * y + 2.5); }
double step_moment(double y) {
  return y * y * y * y * y * (6.0 / 7.0 * y * y - 2.5 * y + 2.0);
}

double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// One smooth field: sum of three separable cosine products with coefficients of total
// magnitude at most one.
class RandomModes {
 public:
  RandomModes(const GridChart& chart, std::mt19937_64& rng) : chart_(chart) {
    const int n = chart.dim();
    double total = 0.0;
    for (int m = 0; m < 3; ++m) {
      Mode mode;
      mode.coeff = 2.0 * unit_draw(rng) - 1.0;
      total += std::abs(mode.coeff);
      for (int a = 0; a < n; ++a) {
        const Axis& ax = chart.axis(a);
        const int k = ax.periodic ? 1 : 1 + static_cast<int>(rng() % 2);
        const double span = ax.periodic ? ax.count * ax.step : (ax.count - 1) * ax.step;
        mode.freq.push_back((ax.periodic ? 2.0 : 1.0) * std::numbers::pi * k / span);
        mode.phase.push_back(ax.periodic ? 2.0 * std::numbers::pi * unit_draw(rng) : 0.0);
      }
      modes_.push_back(std::move(mode));
    }
    for (Mode& mode : modes_) mode.coeff /= std::max(total, 1.0);
  }

  double operator()(std::size_t node) const {
    double v = 0.0;
    for (const Mode& mode : modes_) {
      double p = mode.coeff;
      for (std::size_t a = 0; a < mode.freq.size(); ++a) {
        const Axis& ax = chart_.axis(static_cast<int>(a));
        const double x = chart_.coord(node, static_cast<int>(a)) - ax.origin;
        p *= std::cos(mode.freq[a] * x + mode.phase[a]);
      }
      v += p;
    }
    return v;
  }

 private:
  struct Mode {
    double coeff = 0.0;
    std::vector<double> freq, phase;
  };
  const GridChart& chart_;
  std::vector<Mode> modes_;
};

void require_torus(const ChartPtr& chart, const char* what) {
  if (chart->kind() != ChartKind::TorusBlock)
    throw PreconditionError(std::string(what) + " needs a TorusBlock chart");
}

}  // namespace

double smoothstep5(double y) {
  y = std::clamp(y, 0.0, 1.0);
  return y * y * y * (y * (6.0 * y - 15.0) + 10.0);
}

MetricField traceless_collar_block(const ChartPtr& chart, double a) {
  if (chart->kind() != ChartKind::TorusBlock)
    throw PreconditionError("traceless_collar_block needs a TorusBlock chart");
  const int n = chart->dim(), c = n - 1;
  const double r0 = chart->axis(c).origin;
  return make_metric(chart, [&](std::size_t i) {
    const double r = chart->coord(i, c) - r0;
    Mat m = Mat::Identity(n, n);
    m(0, 0) = 1.0 - 2.0 * r * a;
    m(1, 1) = 1.0 + 2.0 * r * a;
    return m;
  });
}

MetricField sol_block(const ChartPtr& chart, double k) {
  if (chart->kind() != ChartKind::TorusBlock || chart->dim() != 3)
    throw PreconditionError("sol_block needs a 3-dimensional TorusBlock chart");
  return make_metric(chart, [&](std::size_t i) {
    const double r = chart->coord(i, 2);
    Mat m = Mat::Identity(3, 3);
    m(0, 0) = std::exp(2.0 * k * r);
    m(1, 1) = std::exp(-2.0 * k * r);
    return m;
  });
}

double torpedo_length(double plateau, double ramp) {
  return plateau + 0.5 * ramp + 0.5 * std::numbers::pi;
}

MetricField torpedo_cap(const ChartPtr& chart, double plateau, double ramp, double f) {
  if (chart->kind() != ChartKind::SphereCap || chart->dim() != 3)
    throw PreconditionError("torpedo_cap needs a 3-dimensional SphereCap chart");
  if (std::abs(chart->cap_angle() - torpedo_length(plateau, ramp)) > 1e-12)
    throw PreconditionError("torpedo_cap: cap angle does not match the torpedo length");
  const double a = plateau, b = ramp;
  const double q_end = 0.5 * a * a + b * (0.5 * a + b * (0.5 - step_moment(1.0)));
  return make_metric(chart, [&](std::size_t i) {
    const double x = chart->coord(i, 2);
    double theta, q;
    if (x <= a) {
      theta = 0.0;
      q = 0.5 * x * x;
    } else if (x <= a + b) {
      const double y = (x - a) / b;
      theta = b * step_int(y);
      q = 0.5 * a * a + b * (a * (y - step_int(y)) + b * (0.5 * y * y - step_moment(y)));
    } else {
      theta = 0.5 * b + (x - a - b);
      q = q_end;
    }
    const double rho = std::cos(theta);
    const double u = 1.0 + f * q;
    if (!(u > 0.0)) throw PreconditionError("torpedo_cap: conformal factor is not positive");
    const double u4 = u * u * u * u;
    const double s = std::sin(chart->coord(i, 0));
    Mat m = Mat::Zero(3, 3);
    m(0, 0) = u4 * rho * rho;
    m(1, 1) = u4 * rho * rho * s * s;
    m(2, 2) = u4;
    return m;
  });
}

MetricField random_metric(const ChartPtr& chart, std::uint64_t seed, double amplitude) {
  require_torus(chart, "random_metric");
  const int n = chart->dim();
  if (!(amplitude >= 0.0 && amplitude * n < 1.0))
    throw PreconditionError("random_metric: amplitude must lie in [0, 1/dim)");
  std::mt19937_64 rng(seed);
  std::vector<RandomModes> parts;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) parts.emplace_back(*chart, rng);
  return make_metric(chart, [&](std::size_t node) {
    Mat m = Mat::Identity(n, n);
    int p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = amplitude * parts[p++](node);
        m(i, j) += v;
        if (i != j) m(j, i) += v;
      }
    return m;
  });
}

ScalarField random_conformal_factor(const ChartPtr& chart, std::uint64_t seed, double amplitude) {
  require_torus(chart, "random_conformal_factor");
  if (!(amplitude >= 0.0 && amplitude < 1.0))
    throw PreconditionError("random_conformal_factor: amplitude must lie in [0, 1)");
  std::mt19937_64 rng(seed);
  const RandomModes p(*chart, rng);
  return make_scalar(chart, [&](std::size_t node) { return 1.0 + amplitude * p(node); });
}

}  // namespace ryam
