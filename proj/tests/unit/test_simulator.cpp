#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "ntkspec/errors.hpp"
#include "ntkspec/io.hpp"
#include "ntkspec/simulator.hpp"
#include "ntkspec/spectra.hpp"

using namespace ntkspec;

namespace {

NetworkShape make_shape(int n, std::vector<int> dims, int k = 1) {
  NetworkShape s;
  s.n = n;
  s.dims = std::move(dims);
  s.k = k;
  return s;
}

double rel_frob(const Matrix& a, const Matrix& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("shape validation") {
  CHECK_NOTHROW(make_shape(10, {5, 3}).validate());
  CHECK_THROWS_AS(make_shape(0, {5, 3}).validate(), InvalidArgument);
  CHECK_THROWS_AS(make_shape(10, {5}).validate(), InvalidArgument);
  CHECK_THROWS_AS(make_shape(10, {5, 0}).validate(), InvalidArgument);
  auto s = make_shape(12, {4, 6, 3});
  CHECK(s.gammas() == std::vector<double>{2.0, 4.0});
  CHECK(s.gamma0() == 3.0);
  s.taus = {1.0, 2.0};
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
}

TEST_CASE("input generators") {
  const Matrix g = sample_input(InputKind::gaussian, 1000, 1000, 42);
  double dev = 0.0;
  for (Eigen::Index j = 0; j < g.cols(); ++j) dev = std::max(dev, std::abs(g.col(j).squaredNorm() - 1.0));
  CHECK(dev <= 0.3);
  const Matrix s = sample_input(InputKind::sphere, 50, 7, 3);
  for (Eigen::Index j = 0; j < s.cols(); ++j) CHECK(std::abs(s.col(j).norm() - 1.0) <= 1e-12);
  CHECK(sample_input(InputKind::gaussian, 20, 5, 9) == sample_input(InputKind::gaussian, 20, 5, 9));
  CHECK(sample_input(InputKind::gaussian, 20, 5, 9) != sample_input(InputKind::gaussian, 20, 5, 10));
  CHECK_THROWS_AS(sample_input(InputKind::gaussian, 0, 5, 1), InvalidArgument);
  CHECK_THROWS_AS(parse_input_kind("uniform"), InvalidArgument);

  const std::string path = std::string(NTKSPEC_TEST_TMP) + "_in.csv";
  Matrix m(2, 3);
  m << 1.5, -2.0, 3.25, 0.0, 1e-7, 4.0;
  write_matrix_csv(path, m);
  CHECK(sample_input(InputKind::file, 3, 2, 0, path) == m);
  CHECK_THROWS_AS(sample_input(InputKind::file, 2, 3, 0, path), IngestionError);
}

TEST_CASE("PC removal") {
  const Matrix X = sample_input(InputKind::gaussian, 40, 30, 1);
  const auto p0 = remove_top_pcs(X, 0);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    CHECK(std::abs(p0.X.col(j).norm() - 1.0) <= 1e-12);
    CHECK((p0.X.col(j) - X.col(j).normalized()).norm() <= 1e-12);
  }
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(6, 1.0, 2.0);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(4, -1.0, 3.0);
  const Matrix rank1 = u * v.transpose();
  const auto r1 = remove_top_pcs(rank1, 1);
  CHECK(r1.X.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r1.zero_columns.size() == 4);
  CHECK_THROWS_AS(remove_top_pcs(rank1, 2), InvalidArgument);
  CHECK_THROWS_AS(remove_top_pcs(X, 31), InvalidArgument);

  const auto p5 = remove_top_pcs(X, 5);
  Eigen::JacobiSVD<Matrix> before(X);
  Eigen::JacobiSVD<Matrix> after(p5.X);
  // Column renormalization rescales each column; compare before that step.
  Matrix unnormalized = p5.X;
  Eigen::BDCSVD<Matrix> full(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Matrix residual = X - full.matrixU().leftCols(5) * full.singularValues().head(5).asDiagonal() *
                            full.matrixV().leftCols(5).transpose();
  Eigen::JacobiSVD<Matrix> res_svd(residual);
  CHECK(res_svd.singularValues()(0) <= before.singularValues()(5) + 1e-10);
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    CHECK((p5.X.col(j) - residual.col(j).normalized()).norm() <= 1e-10);
  }
  const auto centered = remove_top_pcs(X, 0, true);
  CHECK(centered.centered);
}

TEST_CASE("orthonormality checker") {
  const Matrix I = Matrix::Identity(6, 6);
  const auto r = check_orthonormal(I, 0.1, 1.0);
  CHECK(r.epsilon_diag == 0.0);
  CHECK(r.epsilon_offdiag == 0.0);
  CHECK(r.op_norm == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.diag_sq_sum == 0.0);
  CHECK(r.pass());
  Matrix twins = sample_input(InputKind::sphere, 5, 8, 2);
  twins.col(1) = twins.col(0);
  const auto t = check_orthonormal(twins, 0.99, 10.0);
  CHECK(t.epsilon_offdiag == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(t.pass_offdiag);
  const Matrix g = sample_input(InputKind::gaussian, 2000, 2000, 17);
  const auto gr = check_orthonormal(g, 1.0, 100.0);
  CHECK(gr.epsilon_offdiag <= 5.0 * std::sqrt(std::log(2000.0) / 2000.0));
}

TEST_CASE("forward pass") {
  const Activation id = builtin_activation("identity");
  const auto shape = make_shape(6, {6, 9});
  const Matrix X0 = Matrix::Identity(6, 6);
  const auto st = forward(X0, shape, id, 3);
  CHECK((st.X[1] - st.W[0] / 3.0).norm() <= 1e-14);
  CHECK((ck_matrix(st, 1) - st.W[0].transpose() * st.W[0] / 9.0).norm() <= 1e-12);

  const Activation act = builtin_activation("tanh");
  const auto big = make_shape(2000, {800, 1500, 1500});
  const Matrix Xg = sample_input(InputKind::gaussian, 2000, 800, 4);
  const auto s2 = forward(Xg, big, act, 8);
  for (int l = 1; l <= 2; ++l) {
    const double mean_diag = s2.X[l].colwise().squaredNorm().mean();
    CHECK(mean_diag >= 0.9);
    CHECK(mean_diag <= 1.1);
  }
  const Eigen::VectorXd h = s2.W[1] * s2.X[1].col(17);
  const Eigen::VectorXd x2 = h.unaryExpr([&](double v) { return act(v); }) / std::sqrt(1500.0);
  CHECK((x2 - s2.X[2].col(17)).norm() <= 1e-12);
  const auto again = forward(Xg, big, act, 8);
  CHECK(again.X[2] == s2.X[2]);
  CHECK_THROWS_AS(forward(Matrix::Zero(3, 6), shape, id, 1), InvalidArgument);

  auto blowup = normalize_activation([](double x) { return x; }, [](double) { return 1.0; }, 1.0);
  Matrix huge = Matrix::Constant(6, 6, 1e308);
  CHECK_THROWS_AS(forward(huge, shape, blowup, 1), NumericError);
}

TEST_CASE("kernel matrices") {
  const Activation id = builtin_activation("identity");
  const auto shape = make_shape(10, {7, 12});
  const Matrix X0 = sample_input(InputKind::gaussian, 10, 7, 5);
  const auto st = forward(X0, shape, id, 6);
  const Matrix K = ntk_explicit(st, id);
  const double wn = st.w_out.squaredNorm() / 12.0;
  CHECK((K - (ck_matrix(st, 1) + wn * ck_matrix(st, 0))).norm() <= 1e-12 * K.norm());
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Matrix ck0 = ck_matrix(st, 0);
  CHECK((ck0 - X0.transpose() * X0).norm() <= 1e-13);
  CHECK((ck0 - ck0.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(ck_matrix(st, 2), InvalidArgument);

  const auto sur = ntk_surrogate(st, layer_constants(id, 1));
  CHECK((sur - ck_matrix(st, 0) - ck_matrix(st, 1)).norm() <= 1e-12);
  const Activation cosine = builtin_activation("cos-centered");
  const auto stc = forward(X0, shape, cosine, 6);
  const auto c = layer_constants(cosine, 1);
  const Matrix expect = c.r_plus * Matrix::Identity(10, 10) + ck_matrix(stc, 1);
  CHECK((ntk_surrogate(stc, c) - expect).norm() <= 1e-9);
}

TEST_CASE("NTK agrees with the Jacobian oracle") {
  const Matrix X0 = sample_input(InputKind::gaussian, 8, 6, 21);
  for (const char* name : {"tanh", "atan"}) {
    const Activation act = builtin_activation(name);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const auto st = forward(X0, make_shape(8, {6, 5, 4}), act, seed);
      CHECK(rel_frob(ntk_explicit(st, act), ntk_jacobian_oracle(st, act)) <= 1e-10);
      const auto st2 = forward(X0, make_shape(8, {6, 5, 4}, 2), act, seed);
      const std::vector<double> taus{0.7, 1.3, 2.1};
      CHECK(rel_frob(ntk_multi_explicit(st2, act, taus), ntk_jacobian_oracle(st2, act, taus)) <= 1e-10);
    }
  }
  const Activation act = builtin_activation("tanh");
  const auto st = forward(X0, make_shape(8, {6, 5, 4}), act, 4);
  const std::vector<double> ones{1.0, 1.0, 1.0};
  CHECK(rel_frob(ntk_multi_explicit(st, act, ones), ntk_explicit(st, act)) <= 1e-14);
}

TEST_CASE("Jacobian oracle: single sample and finite differences") {
  const Activation act = builtin_activation("atan");
  const Matrix x = sample_input(InputKind::gaussian, 1, 4, 2);
  auto st = forward(x, make_shape(1, {4, 5, 3}), act, 9);
  const Matrix K = ntk_jacobian_oracle(st, act);
  REQUIRE(K.rows() == 1);
  // ||grad f||^2 by central differences over every parameter.
  const double h = 1e-5;
  double sq = 0.0;
  for (auto& W : st.W) {
    for (Eigen::Index i = 0; i < W.size(); ++i) {
      const double keep = W.data()[i];
      W.data()[i] = keep + h;
      const double fp = network_output(st, act, x.col(0));
      W.data()[i] = keep - h;
      const double fm = network_output(st, act, x.col(0));
      W.data()[i] = keep;
      sq += std::pow((fp - fm) / (2 * h), 2);
    }
  }
  for (Eigen::Index i = 0; i < st.w_out.size(); ++i) {
    const double keep = st.w_out.data()[i];
    st.w_out.data()[i] = keep + h;
    const double fp = network_output(st, act, x.col(0));
    st.w_out.data()[i] = keep - h;
    const double fm = network_output(st, act, x.col(0));
    st.w_out.data()[i] = keep;
    sq += std::pow((fp - fm) / (2 * h), 2);
  }
  CHECK(std::abs(K(0, 0) - sq) <= 1e-6 * sq);

  const auto big = forward(sample_input(InputKind::gaussian, 400, 100, 1), make_shape(400, {100, 300, 300}), act, 1);
  CHECK_THROWS_AS(ntk_jacobian_oracle(big, act), InvalidArgument);
}

TEST_CASE("multi-output off-diagonal blocks shrink with n") {
  const Activation act = builtin_activation("tanh");
  const std::vector<double> taus{1.0, 1.0, 1.0};
  std::vector<double> ratio;
  for (int n : {250, 500, 1000}) {
    double acc = 0.0;
    for (std::uint64_t seed : {1u, 2u}) {
      const Matrix X0 = sample_input(InputKind::gaussian, n, n / 2, seed);
      const auto st = forward(X0, make_shape(n, {n / 2, n, n}, 2), act, seed + 10);
      const Matrix K = ntk_multi_explicit(st, act, taus);
      acc += K.block(n, 0, n, n).squaredNorm() / n;
    }
    ratio.push_back(acc / 2);
  }
  CHECK(ratio[1] < ratio[0]);
  CHECK(ratio[2] < ratio[1]);
}

TEST_CASE("kernel operator norms stay bounded across n") {
  const Activation act = builtin_activation("tanh");
  for (int n : {200, 400, 800}) {
    const Matrix X0 = sample_input(InputKind::gaussian, n, n / 2, 3);
    const auto st = forward(X0, make_shape(n, {n / 2, n, n}), act, 4);
    const auto ck = eigenvalues_symmetric(ck_matrix(st, 2));
    const auto ntk = eigenvalues_symmetric(ntk_explicit(st, act));
    CAPTURE(n);
    CHECK(ck.values.back() <= 15.0);
    CHECK(ntk.values.back() <= 40.0);
    CHECK(ck.values.front() >= -1e-10 * ck.values.back());
    CHECK(ntk.values.front() >= -1e-10 * ntk.values.back());
  }
}

TEST_CASE("orthonormality propagates through layers") {
  const Activation act = builtin_activation("tanh");
  const int n = 600;
  const Matrix X0 = sample_input(InputKind::gaussian, n, 600, 12);
  const auto r0 = check_orthonormal(X0, 1.0, 1e9);
  const auto st = forward(X0, make_shape(n, {600, 900, 900, 900}), act, 13);
  for (int l = 1; l <= 3; ++l) {
    const auto r = check_orthonormal(st.X[l], 1.0, 1e9);
    CAPTURE(l);
    CHECK(r.epsilon_offdiag <= 3.0 * r0.epsilon_offdiag);
    CHECK(r.diag_sq_sum <= 5.0 * r0.diag_sq_sum + 5.0);
    CHECK(r.op_norm <= 3.0 * r0.op_norm);
  }
}
