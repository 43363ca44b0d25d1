#include <doctest.h>

#include <cmath>
#include <random>

#include "ntkspec/errors.hpp"
#include "ntkspec/limits.hpp"
#include "ntkspec/simulator.hpp"
#include "ntkspec/spectra.hpp"
#include "oracles.hpp"

using namespace ntkspec;

TEST_CASE("eigenvalues of small matrices") {
  Eigen::MatrixXd d = Eigen::Vector3d(3, 1, 2).asDiagonal();
  const auto e = eigenvalues_symmetric(d);
  CHECK(e.values == std::vector<double>{1.0, 2.0, 3.0});
  CHECK(e.n == 3);
  Eigen::Matrix2d s;
  s << 0, 1, 1, 0;
  const auto e2 = eigenvalues_symmetric(s);
  CHECK(e2.values[0] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(e2.values[1] == doctest::Approx(1.0).epsilon(1e-15));
  Eigen::Matrix2d bad = s;
  bad(0, 1) = NAN;
  CHECK_THROWS_AS(eigenvalues_symmetric(bad), NumericError);
  Eigen::Matrix2d skew;
  skew << 1, 2, 0, 1;
  const auto e3 = eigenvalues_symmetric(skew);
  CHECK(e3.values[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(e3.values[1] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("trace identities") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  Eigen::MatrixXd A(50, 50);
  for (int i = 0; i < 50; ++i)
    for (int j = 0; j < 50; ++j) A(i, j) = n(rng);
  const Eigen::MatrixXd K = A + A.transpose();
  const auto e = eigenvalues_symmetric(K);
  double s1 = 0.0, s2 = 0.0;
  for (double v : e.values) {
    s1 += v;
    s2 += v * v;
  }
  CHECK(std::abs(s1 - K.trace()) <= 1e-10 * K.norm());
  CHECK(std::abs(s2 - K.squaredNorm()) <= 1e-10 * K.squaredNorm());
  CHECK(std::is_sorted(e.values.begin(), e.values.end()));
}

TEST_CASE("empirical stieltjes") {
  const auto single = spectrum_from_values({2.0});
  const cplx z(1.0, 0.5);
  CHECK(std::abs(empirical_stieltjes(single, z) - 1.0 / (2.0 - z)) <= 1e-15);
  const auto two = spectrum_from_values({0.0, 2.0});
  CHECK(std::abs(empirical_stieltjes(two, z) - 0.5 * (1.0 / (-z) + 1.0 / (2.0 - z))) <= 1e-15);
  std::vector<double> v;
  std::vector<oracle::Atom> ref;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int i = 0; i < 300; ++i) {
    v.push_back(u(rng));
    ref.push_back({v.back(), 1.0 / 300});
  }
  const auto spec = spectrum_from_values(v);
  const cplx want = oracle::rational_moment_ld(ref, -z, 1.0, 1.0, 0.0);
  CHECK(std::abs(empirical_stieltjes(spec, z) - want) <= 1e-13);
  CHECK_THROWS_AS(empirical_stieltjes(spec, cplx(1.0, 0.0)), ContractViolation);
  CHECK_THROWS_AS(empirical_stieltjes(EigenSpectrum{}, z), InvalidArgument);
}

TEST_CASE("compare against matching and mismatched limits") {
  const SolverOptions opts;
  const double eta = 0.01;
  const auto mp = SpectralMeasure::marchenko_pastur(0.5, 2000);
  std::vector<double> atoms;
  for (const auto& a : mp.atoms()) atoms.push_back(a.location);
  const auto exact = spectrum_from_values(atoms);
  const auto equal = SpectralMeasure::from_samples(atoms);
  const auto grid = linspace(exact.values.front() - 0.5, exact.values.back() + 0.5, 3000);
  const auto self = density_from_stieltjes([&](cplx z) { return stieltjes(equal, z); }, grid, eta);
  CHECK(compare(exact, self).kolmogorov <= 2.0 / 2000);
  CHECK_FALSE(compare(exact, self).coverage_warning);

  // Wishart with ratio 1/2: sample covariance of 4000 x 2000 Gaussian data.
  const Matrix X = sample_input(InputKind::gaussian, 2000, 4000, 99);
  const auto sim = eigenvalues_symmetric(X.transpose() * X);
  const auto mp_curve =
      density_from_stieltjes([](cplx z) { return oracle::mp_transform(0.5, z); },
                             linspace(sim.values.front() - 0.5, sim.values.back() + 0.5, 3000), eta);
  const auto report = compare(sim, mp_curve);
  CHECK(report.kolmogorov <= 0.04);
  CHECK(report.mass_limit >= 0.9);
  const auto wrong =
      density_from_stieltjes([](cplx z) { return oracle::mp_transform(0.25, z); },
                             linspace(sim.values.front() - 0.5, sim.values.back() + 0.5, 3000), eta);
  CHECK(compare(sim, wrong).kolmogorov >= 0.1);

  const auto zg = default_zgrid(sim.values.front(), sim.values.back());
  CHECK(zg.size() == 20);
  CHECK(zg[0].imag() == 0.05);
  const auto exact_report = compare(sim, mp_curve, zg, [](cplx z) { return oracle::mp_transform(0.5, z); });
  CHECK(exact_report.stieltjes_sup <= 0.05);
  CHECK(exact_report.kolmogorov == report.kolmogorov);

  const auto narrow = density_from_stieltjes([](cplx z) { return oracle::mp_transform(0.5, z); },
                                             linspace(0.5, 1.0, 50), eta);
  CHECK(compare(sim, narrow).coverage_warning);
  CHECK_THROWS_AS(compare(EigenSpectrum{}, narrow), InvalidArgument);
}

TEST_CASE("histogram") {
  const auto one = spectrum_from_values({2.0});
  const auto h1 = histogram(one, 1);
  const double width = h1.edges[1] - h1.edges[0];
  CHECK(h1.density[0] == doctest::Approx(1.0 / width));

  std::vector<double> v;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100000; ++i) v.push_back(u(rng));
  const auto spec = spectrum_from_values(v);
  const auto h = histogram(spec, 20);
  double mass = 0.0;
  for (std::size_t b = 0; b < h.density.size(); ++b) {
    mass += h.density[b] * (h.edges[b + 1] - h.edges[b]);
    CHECK(h.density[b] == doctest::Approx(1.0).epsilon(0.05));
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(histogram(spec, 0), InvalidArgument);
}

TEST_CASE("empirical CK transform approaches the limit as n grows") {
  const SolverOptions opts;
  const Activation act = builtin_activation("tanh");
  const cplx z(1.0, 0.1);
  const cplx lim =
      ck_stieltjes(SpectralMeasure::marchenko_pastur(2.0), std::vector<double>{1.0}, act.b_sigma(), z, opts);
  std::vector<double> gaps;
  for (int n : {250, 2000}) {
    double gap = 0.0;
    for (std::uint64_t seed : {31, 32, 33, 34}) {
      const Matrix X0 = sample_input(InputKind::gaussian, n, n / 2, seed);
      NetworkShape shape;
      shape.n = n;
      shape.dims = {n / 2, n};
      const auto st = forward(X0, shape, act, seed + 100);
      gap += std::abs(empirical_stieltjes(eigenvalues_symmetric(ck_matrix(st, 1)), z) - lim) / 4.0;
    }
    gaps.push_back(gap);
  }
  CHECK(gaps[1] < gaps[0]);
}
