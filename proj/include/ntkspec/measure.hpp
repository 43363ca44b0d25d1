#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ntkspec {

using cplx = std::complex<double>;

struct Atom {
  double location = 0.0;
  double weight = 0.0;
};

// Weighted atomic measure on [0, inf).
class SpectralMeasure {
 public:
  SpectralMeasure() = default;
  // Throws InvalidArgument for negative or non-finite locations and
  // nonpositive weights. When `normalize` is set the weights are rescaled to
  // sum to one.
  explicit SpectralMeasure(std::vector<Atom> atoms, bool normalize = true);

  static SpectralMeasure point_mass(double location);
  // Equal-weight measure on the given values. Negative values down to
  // -1e-9 * max|v| (eigensolver round-off) are clamped to zero.
  static SpectralMeasure from_samples(std::span<const double> values);
  // Marchenko-Pastur law with ratio gamma, discretized by an N-point
  // midpoint rule in the angle x = 1 + gamma - 2 sqrt(gamma) cos(theta);
  // the integrand of any analytic test function is then smooth and
  // periodic, so the rule converges geometrically. For gamma > 1 an atom of
  // mass 1 - 1/gamma is placed at zero.
  static SpectralMeasure marchenko_pastur(double gamma, int atoms = 4000);

  std::span<const Atom> atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  bool normalized() const { return normalized_; }
  double total_mass() const;
  double min_location() const;
  double max_location() const;

 private:
  std::vector<Atom> atoms_;
  bool normalized_ = false;
};

// m(z) = sum_i w_i / (x_i - z); requires Im z > 0.
cplx stieltjes(const SpectralMeasure& mu, cplx z);

// sum_i w_i (w_m1 + w0 x_i) / (z_m1 + z0 x_i). Throws SingularArgumentError
// when a denominator has modulus below 1e-14.
cplx rational_moment(const SpectralMeasure& mu, cplx z_m1, cplx z0, cplx w_m1, cplx w0);

struct PointDiagnostics {
  int iterations = 0;
  int reinits = 0;
  bool converged = true;
  bool negative_clipped = false;
  std::string failure;
};

// Smoothed density pi^{-1} Im m(x + i eta) on a grid.
struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density;
  double eta = 0.0;
  std::vector<PointDiagnostics> diagnostics;

  std::size_t size() const { return grid.size(); }
  double unconverged_fraction() const;
  // Trapezoidal integral over the grid.
  double mass() const;
};

DensityCurve density_from_stieltjes(const std::function<cplx(cplx)>& m,
                                    std::span<const double> grid, double eta);

// Trapezoidal running integral of the density, starting at zero.
std::vector<double> cdf_from_curve(const DensityCurve& curve);

std::vector<double> linspace(double lo, double hi, int n);

}  // namespace ntkspec
