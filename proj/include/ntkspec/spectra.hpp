#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ntkspec/measure.hpp"

namespace ntkspec {

struct EigenSpectrum {
  std::vector<double> values;  // ascending
  std::string source;
  int n = 0;
};

// Ascending eigenvalues of a symmetric matrix. Asymmetry beyond
// 1e-8 * max|K| is removed by averaging with the transpose.
EigenSpectrum eigenvalues_symmetric(const Eigen::MatrixXd& K, std::string source = {});

EigenSpectrum spectrum_from_values(std::vector<double> values, std::string source = {});

// (1/n) sum_a 1 / (lambda_a - z).
cplx empirical_stieltjes(const EigenSpectrum& spec, cplx z);

struct ComparisonReport {
  double kolmogorov = 0.0;
  double stieltjes_sup = 0.0;
  double mass_limit = 0.0;
  double unconverged_fraction = 0.0;
  bool coverage_warning = false;
};

// 20 points spanning [lo, hi] at height `im`.
std::vector<cplx> default_zgrid(double lo, double hi, double im = 0.05, int points = 20);

// The empirical side is smoothed by the curve's Cauchy kernel before the CDFs
// are compared on the curve grid. The curve integral of rho_eta / (x - z)
// equals the limit transform at z + i eta, so it is compared with the
// empirical transform there.
ComparisonReport compare(const EigenSpectrum& spec, const DensityCurve& curve,
                         std::span<const cplx> zgrid);
ComparisonReport compare(const EigenSpectrum& spec, const DensityCurve& curve);
// Same Kolmogorov statistic, Stieltjes difference taken against an exact
// limit transform at the z-grid itself.
ComparisonReport compare(const EigenSpectrum& spec, const DensityCurve& curve,
                         std::span<const cplx> zgrid, const std::function<cplx(cplx)>& limit);

struct Histogram {
  std::vector<double> edges;    // bins + 1
  std::vector<double> density;  // count / (n * width)
};

// Bins span [min, max]; a degenerate range is widened to unit width.
Histogram histogram(const EigenSpectrum& spec, int bins);
Histogram histogram(const EigenSpectrum& spec, int bins, double lo, double hi);

}  // namespace ntkspec
