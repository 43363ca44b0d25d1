#include "ntkspec/activation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "ntkspec/errors.hpp"
#include "ntkspec/quadrature.hpp"

namespace ntkspec {

Activation normalize_activation(ScalarFunction raw, ScalarFunction raw_deriv, double lambda_hint,
                                std::string name) {
  if (!(lambda_hint > 0.0)) throw InvalidArgument("lambda_hint must be positive");
  const int nodes = kActivationQuadratureNodes;
  const double mean = gaussian_moment(raw, nodes);
  const double var = gaussian_moment([&](double x) {
    const double c = raw(x) - mean;
    return c * c;
  }, nodes);
  if (!(var > 1e-14)) {
    std::ostringstream msg;
    msg << "activation '" << name << "' is degenerate: Gaussian variance " << var;
    throw DegenerateActivationError(msg.str());
  }

  Activation act;
  act.raw_ = std::move(raw);
  act.raw_deriv_ = std::move(raw_deriv);
  act.shift_ = mean;
  act.scale_ = std::sqrt(var);
  act.name_ = std::move(name);
  act.b_sigma_ = gaussian_moment([&](double x) { return act.derivative(x); }, nodes);
  act.a_sigma_ = gaussian_moment([&](double x) {
    const double d = act.derivative(x);
    return d * d;
  }, nodes);
  act.lambda_sigma_ = lambda_hint / act.scale_;
  return act;
}

std::vector<std::string> builtin_activation_names() {
  return {"identity", "atan", "tanh", "sigmoid-centered", "cos-centered"};
}

Activation builtin_activation(std::string_view name, bool allow_unsafe) {
  if (name == "identity") {
    return normalize_activation([](double x) { return x; }, [](double) { return 1.0; }, 1.0,
                                "identity");
  }
  if (name == "atan") {
    // |atan'| <= 1, |atan''| <= 3*sqrt(3)/8.
    return normalize_activation([](double x) { return std::atan(x); },
                                [](double x) { return 1.0 / (1.0 + x * x); }, 1.0, "atan");
  }
  if (name == "tanh") {
    return normalize_activation([](double x) { return std::tanh(x); },
                                [](double x) {
                                  const double c = std::cosh(x);
                                  return 1.0 / (c * c);
                                },
                                1.0, "tanh");
  }
  if (name == "sigmoid-centered") {
    return normalize_activation([](double x) { return 1.0 / (1.0 + std::exp(-x)) - 0.5; },
                                [](double x) {
                                  const double s = 1.0 / (1.0 + std::exp(-x));
                                  return s * (1.0 - s);
                                },
                                0.25, "sigmoid-centered");
  }
  if (name == "cos-centered") {
    return normalize_activation([](double x) { return std::cos(x); },
                                [](double x) { return -std::sin(x); }, 1.0, "cos-centered");
  }
  if (name == "relu") {
    if (!allow_unsafe) {
      throw InvalidArgument(
          "relu is not twice differentiable; pass the unsafe-activation override to use it");
    }
    Activation act = normalize_activation([](double x) { return x > 0.0 ? x : 0.0; },
                                          [](double x) { return x > 0.0 ? 1.0 : 0.0; }, 1.0,
                                          "relu");
    act.unsafe_ = true;
    return act;
  }
  throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

namespace {

// Natural cubic spline with linear extension beyond the end knots.
struct CubicSpline {
  std::vector<double> x, y, m;  // m = second derivatives at knots

  CubicSpline(std::vector<double> xs, std::vector<double> ys) : x(std::move(xs)), y(std::move(ys)) {
    const std::size_t n = x.size();
    m.assign(n, 0.0);
    if (n < 3) return;
    std::vector<double> c(n, 0.0), d(n, 0.0);
    // Thomas algorithm on the interior equations.
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x[i] - x[i - 1];
      const double h1 = x[i + 1] - x[i];
      const double a = h0 / 6.0;
      const double b = (h0 + h1) / 3.0;
      const double cc = h1 / 6.0;
      const double rhs = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
      const double denom = b - a * c[i - 1];
      c[i] = cc / denom;
      d[i] = (rhs - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m[i] = d[i] - c[i] * m[i + 1];
      if (i == 1) break;
    }
  }

  std::size_t segment(double t) const {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t i = static_cast<std::size_t>(std::distance(x.begin(), it));
    if (i == 0) return 0;
    return std::min(i - 1, x.size() - 2);
  }

  double slope_at_left() const {
    const double h = x[1] - x[0];
    return (y[1] - y[0]) / h - h * (2.0 * m[0] + m[1]) / 6.0;
  }
  double slope_at_right() const {
    const std::size_t n = x.size();
    const double h = x[n - 1] - x[n - 2];
    return (y[n - 1] - y[n - 2]) / h + h * (m[n - 2] + 2.0 * m[n - 1]) / 6.0;
  }

  double value(double t) const {
    if (t <= x.front()) return y.front() + slope_at_left() * (t - x.front());
    if (t >= x.back()) return y.back() + slope_at_right() * (t - x.back());
    const std::size_t i = segment(t);
    const double h = x[i + 1] - x[i];
    const double A = (x[i + 1] - t) / h;
    const double B = (t - x[i]) / h;
    return A * y[i] + B * y[i + 1] + ((A * A * A - A) * m[i] + (B * B * B - B) * m[i + 1]) * h * h / 6.0;
  }

  double derivative(double t) const {
    if (t <= x.front()) return slope_at_left();
    if (t >= x.back()) return slope_at_right();
    const std::size_t i = segment(t);
    const double h = x[i + 1] - x[i];
    const double A = (x[i + 1] - t) / h;
    const double B = (t - x[i]) / h;
    return (y[i + 1] - y[i]) / h - (3.0 * A * A - 1.0) * h * m[i] / 6.0 +
           (3.0 * B * B - 1.0) * h * m[i + 1] / 6.0;
  }
};

}  // namespace

Activation activation_from_table(std::vector<double> xs, std::vector<double> ys, double lambda_hint,
                                 std::string name) {
  if (xs.size() != ys.size()) throw InvalidArgument("activation table: column length mismatch");
  if (xs.size() < 4) throw InvalidArgument("activation table needs at least 4 rows");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) throw InvalidArgument("activation table: x must be strictly increasing");
  }
  auto spline = std::make_shared<const CubicSpline>(std::move(xs), std::move(ys));
  return normalize_activation([spline](double t) { return spline->value(t); },
                              [spline](double t) { return spline->derivative(t); }, lambda_hint,
                              std::move(name));
}

Activation activation_from_table_file(const std::string& path, double lambda_hint) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open activation table '" + path + "'");
  std::vector<double> xs, ys;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0, y = 0.0;
    if (!(row >> x >> y)) {
      if (first) {
        first = false;
        continue;
      }
      throw IngestionError("activation table '" + path + "': malformed row '" + line + "'");
    }
    first = false;
    xs.push_back(x);
    ys.push_back(y);
  }
  return activation_from_table(std::move(xs), std::move(ys), lambda_hint, "table:" + path);
}

LayerConstants layer_constants(double b_sigma, double a_sigma, int L) {
  if (L < 1) throw InvalidArgument("layer count L must be >= 1");
  LayerConstants c;
  c.q.resize(L);
  c.r.resize(L);
  const double b2 = b_sigma * b_sigma;
  for (int l = 0; l < L; ++l) {
    c.q[l] = std::pow(b2, L - l);
    c.r[l] = std::pow(a_sigma, L - l);
    c.r_plus += c.r[l] - c.q[l];
  }
  return c;
}

LayerConstants layer_constants(const Activation& act, int L) {
  return layer_constants(act.b_sigma(), act.a_sigma(), L);
}

}  // namespace ntkspec
