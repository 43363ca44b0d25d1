#include "ntkspec/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "ntkspec/errors.hpp"

namespace ntkspec {

EigenSpectrum eigenvalues_symmetric(const Eigen::MatrixXd& K, std::string source) {
  if (K.rows() != K.cols()) throw InvalidArgument("eigenvalues_symmetric: matrix is not square");
  if (!K.allFinite()) throw NumericError("eigenvalues_symmetric: non-finite matrix entries");
  EigenSpectrum out;
  out.source = std::move(source);
  out.n = static_cast<int>(K.rows());
  if (K.rows() == 0) return out;
  const double scale = K.cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    es.compute(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
  } else {
    es.compute(K, Eigen::EigenvaluesOnly);
  }
  if (es.info() != Eigen::Success) throw NumericError("eigenvalues_symmetric: eigensolver failed");
  out.values.assign(es.eigenvalues().data(), es.eigenvalues().data() + K.rows());
  std::sort(out.values.begin(), out.values.end());
  return out;
}

EigenSpectrum spectrum_from_values(std::vector<double> values, std::string source) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("spectrum contains a non-finite value");
  }
  std::sort(values.begin(), values.end());
  EigenSpectrum out;
  out.n = static_cast<int>(values.size());
  out.values = std::move(values);
  out.source = std::move(source);
  return out;
}

cplx empirical_stieltjes(const EigenSpectrum& spec, cplx z) {
  if (!(z.imag() > 0.0)) throw ContractViolation("empirical_stieltjes requires Im z > 0");
  if (spec.values.empty()) throw InvalidArgument("empirical_stieltjes: empty spectrum");
  cplx acc = 0.0;
  for (double v : spec.values) acc += 1.0 / (v - z);
  return acc / static_cast<double>(spec.values.size());
}

std::vector<cplx> default_zgrid(double lo, double hi, double im, int points) {
  std::vector<cplx> z;
  for (double x : linspace(lo, hi, points)) z.emplace_back(x, im);
  return z;
}

namespace {

ComparisonReport kolmogorov_part(const EigenSpectrum& spec, const DensityCurve& curve) {
  if (spec.values.empty()) throw InvalidArgument("compare: empty spectrum");
  if (curve.size() < 2) throw InvalidArgument("compare: curve needs at least two grid points");
  if (!(curve.eta > 0.0)) throw InvalidArgument("compare: curve eta must be positive");
  ComparisonReport r;
  r.mass_limit = curve.mass();
  r.unconverged_fraction = curve.unconverged_fraction();
  r.coverage_warning = curve.grid.front() > spec.values.front() - curve.eta ||
                       curve.grid.back() < spec.values.back() + curve.eta;

  const double eta = curve.eta;
  const double inv_n = 1.0 / static_cast<double>(spec.values.size());
  auto smoothed_cdf = [&](double x) {
    long double acc = 0.0L;
    for (double v : spec.values) acc += 0.5L + std::atan((x - v) / eta) / std::numbers::pi;
    return static_cast<double>(acc) * inv_n;
  };
  const std::vector<double> limit_cdf = cdf_from_curve(curve);
  const double base = smoothed_cdf(curve.grid.front());
  for (std::size_t j = 0; j < curve.size(); ++j) {
    const double emp = smoothed_cdf(curve.grid[j]) - base;
    r.kolmogorov = std::max(r.kolmogorov, std::abs(emp - limit_cdf[j]));
  }
  return r;
}

cplx curve_transform(const DensityCurve& curve, cplx z) {
  cplx acc = 0.0;
  for (std::size_t j = 1; j < curve.size(); ++j) {
    const double h = curve.grid[j] - curve.grid[j - 1];
    acc += 0.5 * h * (curve.density[j - 1] / (curve.grid[j - 1] - z) + curve.density[j] / (curve.grid[j] - z));
  }
  return acc;
}

}  // namespace

ComparisonReport compare(const EigenSpectrum& spec, const DensityCurve& curve,
                         std::span<const cplx> zgrid) {
  ComparisonReport r = kolmogorov_part(spec, curve);
  const cplx shift(0.0, curve.eta);
  for (const cplx& z : zgrid) {
    const cplx diff = empirical_stieltjes(spec, z + shift) - curve_transform(curve, z);
    r.stieltjes_sup = std::max(r.stieltjes_sup, std::abs(diff));
  }
  return r;
}

ComparisonReport compare(const EigenSpectrum& spec, const DensityCurve& curve) {
  if (spec.values.empty()) throw InvalidArgument("compare: empty spectrum");
  const auto z = default_zgrid(spec.values.front(), spec.values.back());
  return compare(spec, curve, z);
}

ComparisonReport compare(const EigenSpectrum& spec, const DensityCurve& curve,
                         std::span<const cplx> zgrid, const std::function<cplx(cplx)>& limit) {
  ComparisonReport r = kolmogorov_part(spec, curve);
  for (const cplx& z : zgrid) {
    r.stieltjes_sup = std::max(r.stieltjes_sup, std::abs(empirical_stieltjes(spec, z) - limit(z)));
  }
  return r;
}

Histogram histogram(const EigenSpectrum& spec, int bins) {
  if (spec.values.empty()) throw InvalidArgument("histogram: empty spectrum");
  double lo = spec.values.front();
  double hi = spec.values.back();
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(lo))) {
    lo -= 0.5;
    hi += 0.5;
  }
  return histogram(spec, bins, lo, hi);
}

Histogram histogram(const EigenSpectrum& spec, int bins, double lo, double hi) {
  if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
  if (!(hi > lo)) throw InvalidArgument("histogram range must satisfy lo < hi");
  if (spec.values.empty()) throw InvalidArgument("histogram: empty spectrum");
  Histogram h;
  h.edges = linspace(lo, hi, bins + 1);
  h.density.assign(static_cast<std::size_t>(bins), 0.0);
  const double width = (hi - lo) / bins;
  for (double v : spec.values) {
    if (v < lo || v > hi) continue;
    auto b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    h.density[static_cast<std::size_t>(b)] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(spec.values.size()) * width);
  for (double& d : h.density) d *= norm;
  return h;
}

}  // namespace ntkspec
