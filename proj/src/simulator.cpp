#include "ntkspec/simulator.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <sstream>

#include "ntkspec/errors.hpp"
#include "ntkspec/io.hpp"

namespace ntkspec {

namespace {

// Stream ids: 0 for the input matrix, l for W_l, L+1 for the output weights.
std::mt19937_64 column_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t column) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(column),
                    static_cast<std::uint32_t>(column >> 32)};
  return std::mt19937_64(seq);
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed,
                       std::uint64_t stream, double stddev) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    auto rng = column_stream(seed, stream, static_cast<std::uint64_t>(j));
    std::normal_distribution<double> normal(0.0, stddev);
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

Matrix gram(const Matrix& X) {
  Matrix G(X.cols(), X.cols());
  G.setZero();
  G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  G.triangularView<Eigen::StrictlyUpper>() = G.transpose();
  return G;
}

Matrix derivative_of(const Matrix& H, const Activation& act) {
  return H.unaryExpr([&](double h) { return act.derivative(h); });
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericError("non-finite values in " + what);
}

std::vector<double> default_rates(std::span<const double> taus, int L) {
  if (taus.empty()) return std::vector<double>(static_cast<std::size_t>(L) + 1, 1.0);
  if (taus.size() != static_cast<std::size_t>(L) + 1) throw InvalidArgument("need L+1 rates tau");
  for (double t : taus) {
    if (!(t > 0.0)) throw InvalidArgument("rates tau must be positive");
  }
  return {taus.begin(), taus.end()};
}

// Backward sensitivities S_l (d_l x n), l = 1..L, for output weights `w`.
std::vector<Matrix> sensitivity_chain(const LayerStack& stack, const Activation& act,
                                      const Eigen::VectorXd& w) {
  const int L = stack.layers();
  std::vector<Matrix> S(static_cast<std::size_t>(L));
  Matrix D = derivative_of(stack.H[L - 1], act);
  S[L - 1] = D.array().colwise() * (w.array() / std::sqrt(static_cast<double>(stack.width(L))));
  for (int l = L - 1; l >= 1; --l) {
    D = derivative_of(stack.H[l - 1], act);
    Matrix back = stack.W[l].transpose() * S[l];
    S[l - 1] = D.cwiseProduct(back) / std::sqrt(static_cast<double>(stack.width(l)));
  }
  return S;
}

}  // namespace

std::vector<double> NetworkShape::gammas() const {
  std::vector<double> g;
  for (std::size_t l = 1; l < dims.size(); ++l) g.push_back(static_cast<double>(n) / dims[l]);
  return g;
}

std::vector<double> NetworkShape::rates() const { return default_rates(taus, layers()); }

void NetworkShape::validate() const {
  if (n < 1) throw InvalidArgument("sample count n must be >= 1");
  if (dims.size() < 2) throw InvalidArgument("network needs d_0 and at least one hidden width");
  for (int d : dims) {
    if (d < 1) throw InvalidArgument("all widths must be >= 1");
  }
  if (k < 1) throw InvalidArgument("output dimension k must be >= 1");
  default_rates(taus, layers());
}

InputKind parse_input_kind(const std::string& name) {
  if (name == "gaussian") return InputKind::gaussian;
  if (name == "sphere") return InputKind::sphere;
  if (name == "file") return InputKind::file;
  throw InvalidArgument("unknown input kind '" + name + "' (expected gaussian|sphere|file)");
}

Matrix sample_input(InputKind kind, int n, int d0, std::uint64_t seed, const std::string& path) {
  if (n < 1 || d0 < 1) throw InvalidArgument("input needs n >= 1 and d0 >= 1");
  switch (kind) {
    case InputKind::gaussian:
      return gaussian_matrix(d0, n, seed, 0, 1.0 / std::sqrt(static_cast<double>(d0)));
    case InputKind::sphere: {
      Matrix X = gaussian_matrix(d0, n, seed, 0, 1.0);
      for (Eigen::Index j = 0; j < X.cols(); ++j) X.col(j).normalize();
      return X;
    }
    case InputKind::file: {
      Matrix X = read_matrix(path);
      if (X.rows() != d0 || X.cols() != n) {
        std::ostringstream msg;
        msg << "input '" << path << "': expected " << d0 << " x " << n << " matrix, found "
            << X.rows() << " x " << X.cols();
        throw IngestionError(msg.str());
      }
      return X;
    }
  }
  throw InvalidArgument("unknown input kind");
}

PcRemoval remove_top_pcs(const Matrix& X, int p, bool center_columns) {
  const Eigen::Index maxp = std::min(X.rows(), X.cols());
  if (p < 0 || p > maxp) throw InvalidArgument("number of PCs to remove must lie in [0, min(d0, n)]");
  PcRemoval out;
  out.X = X;
  out.centered = center_columns;
  if (center_columns) out.X.rowwise() -= out.X.colwise().mean();
  if (p > 0) {
    Eigen::BDCSVD<Matrix> svd(out.X, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = sv(0) * std::max(X.rows(), X.cols()) * 1e-13;
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cutoff) ++rank;
    if (p > rank) {
      std::ostringstream msg;
      msg << "cannot remove " << p << " PCs from a matrix of numerical rank " << rank;
      throw InvalidArgument(msg.str());
    }
    out.X -= svd.matrixU().leftCols(p) * sv.head(p).asDiagonal() * svd.matrixV().leftCols(p).transpose();
  }
  const double scale = X.cwiseAbs().maxCoeff();
  for (Eigen::Index j = 0; j < out.X.cols(); ++j) {
    const double norm = out.X.col(j).norm();
    if (norm <= 1e-12 * std::max(1.0, scale)) {
      out.X.col(j).setZero();
      out.zero_columns.push_back(static_cast<int>(j));
    } else {
      out.X.col(j) /= norm;
    }
  }
  return out;
}

OrthonormalityReport check_orthonormal(const Matrix& X, double epsilon, double B) {
  OrthonormalityReport r;
  r.epsilon = epsilon;
  r.B = B;
  const Matrix G = gram(X);
  const Eigen::Index n = G.rows();
  for (Eigen::Index a = 0; a < n; ++a) {
    const double dev = G(a, a) - 1.0;
    r.epsilon_diag = std::max(r.epsilon_diag, std::abs(dev));
    r.diag_sq_sum += dev * dev;
    for (Eigen::Index b = 0; b < a; ++b) r.epsilon_offdiag = std::max(r.epsilon_offdiag, std::abs(G(a, b)));
  }
  // |X|^2 is the top eigenvalue of whichever Gram matrix is smaller.
  double top = 0.0;
  if (X.rows() < X.cols()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram(X.transpose()), Eigen::EigenvaluesOnly);
    top = es.eigenvalues().maxCoeff();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(G, Eigen::EigenvaluesOnly);
    top = es.eigenvalues().maxCoeff();
  }
  r.op_norm = std::sqrt(std::max(0.0, top));
  r.pass_diag = r.epsilon_diag <= epsilon;
  r.pass_offdiag = r.epsilon_offdiag <= epsilon;
  r.pass_op_norm = r.op_norm <= B;
  r.pass_diag_sq = r.diag_sq_sum <= B * B;
  return r;
}

LayerStack forward(const Matrix& X0, const NetworkShape& shape, const Activation& act,
                   std::uint64_t seed) {
  shape.validate();
  if (X0.rows() != shape.dims.front() || X0.cols() != shape.n) {
    std::ostringstream msg;
    msg << "forward: input is " << X0.rows() << " x " << X0.cols() << ", shape expects "
        << shape.dims.front() << " x " << shape.n;
    throw InvalidArgument(msg.str());
  }
  const int L = shape.layers();
  LayerStack stack;
  stack.X.reserve(static_cast<std::size_t>(L) + 1);
  stack.X.push_back(X0);
  for (int l = 1; l <= L; ++l) {
    const int d = shape.dims[l];
    stack.W.push_back(gaussian_matrix(d, shape.dims[l - 1], seed, static_cast<std::uint64_t>(l), 1.0));
    stack.H.push_back(stack.W.back() * stack.X.back());
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    stack.X.push_back(stack.H.back().unaryExpr([&](double h) { return act(h) * scale; }));
    require_finite(stack.X.back(), "post-activations of layer " + std::to_string(l));
  }
  stack.w_out = gaussian_matrix(shape.dims.back(), shape.k, seed, static_cast<std::uint64_t>(L) + 1, 1.0);
  return stack;
}

Matrix ck_matrix(const LayerStack& stack, int layer) {
  if (layer < 0 || layer > stack.layers()) throw InvalidArgument("ck_matrix: layer out of range");
  return gram(stack.X[static_cast<std::size_t>(layer)]);
}

Matrix ntk_explicit(const LayerStack& stack, const Activation& act) {
  if (stack.outputs() != 1) throw InvalidArgument("ntk_explicit needs a single-output stack");
  const int L = stack.layers();
  const std::vector<Matrix> S = sensitivity_chain(stack, act, stack.w_out.col(0));
  Matrix K = gram(stack.X[L]);
  for (int l = 1; l <= L; ++l) K += gram(S[l - 1]).cwiseProduct(gram(stack.X[l - 1]));
  require_finite(K, "NTK");
  return K;
}

Matrix ntk_multi_explicit(const LayerStack& stack, const Activation& act,
                          std::span<const double> taus) {
  const int L = stack.layers();
  const std::vector<double> tau = default_rates(taus, L);
  const int k = stack.outputs();
  const Eigen::Index n = stack.samples();
  std::vector<std::vector<Matrix>> chains;
  for (int i = 0; i < k; ++i) chains.push_back(sensitivity_chain(stack, act, stack.w_out.col(i)));
  std::vector<Matrix> grams;
  for (int l = 0; l <= L; ++l) grams.push_back(gram(stack.X[l]));

  Matrix K = Matrix::Zero(n * k, n * k);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) {
      Matrix block = Matrix::Zero(n, n);
      if (i == j) block += tau[L] * grams[L];
      for (int l = 1; l <= L; ++l) {
        const Matrix cross = chains[i][l - 1].transpose() * chains[j][l - 1];
        block += tau[l - 1] * cross.cwiseProduct(grams[l - 1]);
      }
      K.block(i * n, j * n, n, n) = block;
      if (i != j) K.block(j * n, i * n, n, n) = block.transpose();
    }
  }
  require_finite(K, "multi-output NTK");
  return K;
}

Matrix ntk_surrogate(const LayerStack& stack, const LayerConstants& constants) {
  const int L = stack.layers();
  if (constants.q.size() != static_cast<std::size_t>(L)) throw InvalidArgument("ntk_surrogate: constants do not match L");
  if (stack.outputs() != 1) throw InvalidArgument("ntk_surrogate needs a single-output stack");
  Matrix K = gram(stack.X[L]);
  for (int l = 0; l < L; ++l) K += constants.q[l] * gram(stack.X[l]);
  K.diagonal().array() += constants.r_plus;
  return K;
}

Matrix ntk_jacobian_oracle(const LayerStack& stack, const Activation& act,
                           std::span<const double> taus) {
  const int L = stack.layers();
  const std::vector<double> tau = default_rates(taus, L);
  const int k = stack.outputs();
  const int n = stack.samples();
  std::vector<Eigen::Index> offsets{0};
  for (int l = 1; l <= L; ++l) offsets.push_back(offsets.back() + stack.W[l - 1].size());
  offsets.push_back(offsets.back() + stack.w_out.size());
  const Eigen::Index params = offsets.back();
  if (static_cast<double>(params) * n * k > 1e7) {
    throw InvalidArgument("ntk_jacobian_oracle: Jacobian too large for dense assembly");
  }

  // Columns indexed by (output i, sample a) -> i * n + a; rows by parameter.
  Matrix J = Matrix::Zero(params, static_cast<Eigen::Index>(n) * k);
  for (int a = 0; a < n; ++a) {
    std::vector<Eigen::VectorXd> x{stack.X[0].col(a)};
    std::vector<Eigen::VectorXd> h;
    for (int l = 1; l <= L; ++l) {
      h.push_back(stack.W[l - 1] * x.back());
      const double scale = 1.0 / std::sqrt(static_cast<double>(stack.W[l - 1].rows()));
      x.push_back(h.back().unaryExpr([&](double v) { return act(v) * scale; }));
    }
    for (int i = 0; i < k; ++i) {
      const Eigen::Index col = static_cast<Eigen::Index>(i) * n + a;
      // d f_i / d W_{L+1}[:, i] = x_L.
      J.block(offsets[L] + static_cast<Eigen::Index>(i) * x[L].size(), col, x[L].size(), 1) = x[L];
      // delta_l = d f_i / d h_l.
      Eigen::VectorXd delta(h[L - 1].size());
      const double sL = 1.0 / std::sqrt(static_cast<double>(h[L - 1].size()));
      for (Eigen::Index r = 0; r < delta.size(); ++r) {
        delta(r) = stack.w_out(r, i) * act.derivative(h[L - 1](r)) * sL;
      }
      for (int l = L; l >= 1; --l) {
        // d f / d W_l = delta_l x_{l-1}^T, column-major vec.
        const Eigen::VectorXd& xin = x[l - 1];
        const Eigen::Index rows = delta.size();
        for (Eigen::Index c = 0; c < xin.size(); ++c) {
          J.block(offsets[l - 1] + c * rows, col, rows, 1) = delta * xin(c);
        }
        if (l > 1) {
          Eigen::VectorXd up = stack.W[l - 1].transpose() * delta;
          const double s = 1.0 / std::sqrt(static_cast<double>(h[l - 2].size()));
          for (Eigen::Index r = 0; r < up.size(); ++r) up(r) *= act.derivative(h[l - 2](r)) * s;
          delta = std::move(up);
        }
      }
    }
  }
  Matrix K = Matrix::Zero(J.cols(), J.cols());
  for (int l = 0; l <= L; ++l) {
    const auto rows = J.middleRows(offsets[l], offsets[l + 1] - offsets[l]);
    K += tau[l] * (rows.transpose() * rows);
  }
  return K;
}

double network_output(const LayerStack& stack, const Activation& act, const Eigen::VectorXd& x,
                      int output) {
  Eigen::VectorXd cur = x;
  for (const Matrix& W : stack.W) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(W.rows()));
    cur = (W * cur).unaryExpr([&](double v) { return act(v) * scale; });
  }
  return stack.w_out.col(output).dot(cur);
}

}  // namespace ntkspec
