#include "ntkspec/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ntkspec/errors.hpp"

namespace ntkspec {

SpectralMeasure::SpectralMeasure(std::vector<Atom> atoms, bool normalize)
    : atoms_(std::move(atoms)), normalized_(normalize) {
  if (atoms_.empty()) throw InvalidArgument("spectral measure needs at least one atom");
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (!std::isfinite(a.location) || a.location < 0.0) {
      std::ostringstream msg;
      msg << "atom location " << a.location << " is not a finite nonnegative number";
      throw InvalidArgument(msg.str());
    }
    if (!std::isfinite(a.weight) || !(a.weight > 0.0)) {
      std::ostringstream msg;
      msg << "atom weight " << a.weight << " must be positive";
      throw InvalidArgument(msg.str());
    }
    total += a.weight;
  }
  if (normalize) {
    for (Atom& a : atoms_) a.weight /= total;
  }
}

SpectralMeasure SpectralMeasure::point_mass(double location) {
  return SpectralMeasure({Atom{location, 1.0}}, true);
}

SpectralMeasure SpectralMeasure::from_samples(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("empirical measure needs at least one value");
  double scale = 0.0;
  for (double v : values) scale = std::max(scale, std::abs(v));
  const double floor = -1e-9 * scale;
  std::vector<Atom> atoms;
  atoms.reserve(values.size());
  const double w = 1.0 / static_cast<double>(values.size());
  for (double v : values) {
    if (v < 0.0) {
      if (v < floor) {
        std::ostringstream msg;
        msg << "empirical value " << v << " is negative beyond round-off";
        throw InvalidArgument(msg.str());
      }
      v = 0.0;
    }
    atoms.push_back({v, w});
  }
  return SpectralMeasure(std::move(atoms), true);
}

SpectralMeasure SpectralMeasure::marchenko_pastur(double gamma, int n) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidArgument("MP ratio gamma must be > 0");
  if (n < 2) throw InvalidArgument("MP discretization needs at least 2 atoms");
  // Density sqrt((b-x)(x-a)) / (2 pi gamma x) dx becomes
  // 2 sin^2(theta) / (pi x(theta)) dtheta on [0, pi].
  const double rg = std::sqrt(gamma);
  std::vector<Atom> atoms;
  atoms.reserve(n + 1);
  const double h = std::numbers::pi / n;
  for (int k = 0; k < n; ++k) {
    const double theta = (k + 0.5) * h;
    const double x = (1.0 - rg) * (1.0 - rg) + 2.0 * rg * (1.0 - std::cos(theta));
    const double sn = std::sin(theta);
    // sin^2(theta) / x stays bounded at gamma = 1 where x -> 0 with theta.
    double w;
    if (gamma == 1.0) {
      const double c = std::cos(0.5 * theta);
      w = 2.0 * c * c / std::numbers::pi;
    } else {
      w = 2.0 * sn * sn / (std::numbers::pi * x);
    }
    atoms.push_back({x, w * h});
  }
  const double ac_mass = std::min(1.0, 1.0 / gamma);
  double total = 0.0;
  for (const Atom& a : atoms) total += a.weight;
  for (Atom& a : atoms) a.weight *= ac_mass / total;
  if (gamma > 1.0) atoms.push_back({0.0, 1.0 - 1.0 / gamma});
  return SpectralMeasure(std::move(atoms), true);
}

double SpectralMeasure::total_mass() const {
  double total = 0.0;
  for (const Atom& a : atoms_) total += a.weight;
  return total;
}

double SpectralMeasure::min_location() const {
  double m = atoms_.front().location;
  for (const Atom& a : atoms_) m = std::min(m, a.location);
  return m;
}

double SpectralMeasure::max_location() const {
  double m = atoms_.front().location;
  for (const Atom& a : atoms_) m = std::max(m, a.location);
  return m;
}

cplx stieltjes(const SpectralMeasure& mu, cplx z) {
  if (!(z.imag() > 0.0)) throw ContractViolation("stieltjes: Im z must be positive");
  cplx sum = 0.0;
  for (const Atom& a : mu.atoms()) sum += a.weight / (a.location - z);
  return sum;
}

cplx rational_moment(const SpectralMeasure& mu, cplx z_m1, cplx z0, cplx w_m1, cplx w0) {
  cplx sum = 0.0;
  for (const Atom& a : mu.atoms()) {
    const cplx denom = z_m1 + z0 * a.location;
    if (std::abs(denom) < 1e-14) {
      std::ostringstream msg;
      msg << "rational moment denominator vanishes at atom x=" << a.location;
      throw SingularArgumentError(msg.str());
    }
    sum += a.weight * (w_m1 + w0 * a.location) / denom;
  }
  return sum;
}

double DensityCurve::unconverged_fraction() const {
  if (diagnostics.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& d : diagnostics) bad += d.converged ? 0 : 1;
  return static_cast<double>(bad) / static_cast<double>(diagnostics.size());
}

double DensityCurve::mass() const {
  const auto cdf = cdf_from_curve(*this);
  return cdf.empty() ? 0.0 : cdf.back();
}

DensityCurve density_from_stieltjes(const std::function<cplx(cplx)>& m,
                                    std::span<const double> grid, double eta) {
  if (!(eta > 0.0)) throw InvalidArgument("eta must be positive");
  for (std::size_t j = 1; j < grid.size(); ++j) {
    if (!(grid[j] > grid[j - 1])) throw InvalidArgument("density grid must be strictly increasing");
  }
  DensityCurve curve;
  curve.grid.assign(grid.begin(), grid.end());
  curve.eta = eta;
  curve.density.assign(grid.size(), 0.0);
  curve.diagnostics.assign(grid.size(), PointDiagnostics{});
  for (std::size_t j = 0; j < grid.size(); ++j) {
    auto& diag = curve.diagnostics[j];
    try {
      const cplx value = m(cplx(grid[j], eta));
      if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
        throw NumericError("non-finite Stieltjes value");
      }
      double d = value.imag() / std::numbers::pi;
      if (d < 0.0) {
        diag.negative_clipped = d < -1e-12;
        d = 0.0;
      }
      curve.density[j] = d;
    } catch (const std::exception& e) {
      diag.converged = false;
      diag.failure = e.what();
    }
  }
  return curve;
}

std::vector<double> cdf_from_curve(const DensityCurve& curve) {
  std::vector<double> cdf(curve.grid.size(), 0.0);
  for (std::size_t j = 1; j < cdf.size(); ++j) {
    const double dx = curve.grid[j] - curve.grid[j - 1];
    cdf[j] = cdf[j - 1] + 0.5 * dx * (curve.density[j] + curve.density[j - 1]);
  }
  return cdf;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw InvalidArgument("linspace needs at least one point");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = lo + step * i;
  v[n - 1] = hi;
  return v;
}

}  // namespace ntkspec
