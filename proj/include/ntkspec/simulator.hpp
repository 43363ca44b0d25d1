#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ntkspec/activation.hpp"

namespace ntkspec {

using Matrix = Eigen::MatrixXd;

// n samples through layers of widths d_0, ..., d_L with k outputs.
struct NetworkShape {
  int n = 0;
  std::vector<int> dims;      // d_0..d_L
  int k = 1;
  std::vector<double> taus;   // tau_1..tau_{L+1}; empty means all ones

  int layers() const { return static_cast<int>(dims.size()) - 1; }
  // gamma_l = n / d_l for l = 1..L.
  std::vector<double> gammas() const;
  double gamma0() const { return static_cast<double>(n) / dims.front(); }
  std::vector<double> rates() const;
  void validate() const;
};

enum class InputKind { gaussian, sphere, file };

InputKind parse_input_kind(const std::string& name);

// gaussian: i.i.d. N(0, 1/d0) entries; sphere: columns uniform on the unit
// sphere; file: matrix read from `path` (CSV or KSPC binary), which must be
// d0 x n.
Matrix sample_input(InputKind kind, int n, int d0, std::uint64_t seed, const std::string& path = {});

struct PcRemoval {
  Matrix X;
  std::vector<int> zero_columns;  // columns left at zero norm, not renormalized
  bool centered = false;
};

// Subtracts the best rank-p approximation and renormalizes columns to unit
// norm. With `center_columns` the mean of each column is removed first.
PcRemoval remove_top_pcs(const Matrix& X, int p, bool center_columns = false);

struct OrthonormalityReport {
  double epsilon_diag = 0.0;     // max_a | |x_a|^2 - 1 |
  double epsilon_offdiag = 0.0;  // max_{a != b} |x_a^T x_b|
  double op_norm = 0.0;          // |X|
  double diag_sq_sum = 0.0;      // sum_a (|x_a|^2 - 1)^2
  double epsilon = 0.0;
  double B = 0.0;
  bool pass_diag = false;
  bool pass_offdiag = false;
  bool pass_op_norm = false;
  bool pass_diag_sq = false;
  bool pass() const { return pass_diag && pass_offdiag && pass_op_norm && pass_diag_sq; }
};

OrthonormalityReport check_orthonormal(const Matrix& X, double epsilon, double B);

// Weights, pre-activations and post-activations of one random draw.
struct LayerStack {
  std::vector<Matrix> X;    // X_0..X_L, X_l is d_l x n
  std::vector<Matrix> W;    // W_1..W_L stored at index l-1, d_l x d_{l-1}
  std::vector<Matrix> H;    // H_l = W_l X_{l-1} stored at index l-1
  Matrix w_out;             // d_L x k

  int layers() const { return static_cast<int>(W.size()); }
  int samples() const { return static_cast<int>(X.front().cols()); }
  int outputs() const { return static_cast<int>(w_out.cols()); }
  int width(int l) const { return static_cast<int>(X[static_cast<std::size_t>(l)].rows()); }
};

// Standard normal weights from per-(layer, column) RNG streams, so the draw
// is reproducible for a seed independently of evaluation order.
LayerStack forward(const Matrix& X0, const NetworkShape& shape, const Activation& act,
                   std::uint64_t seed);

// X_layer^T X_layer.
Matrix ck_matrix(const LayerStack& stack, int layer);

// X_L^T X_L + sum_l (S_l^T S_l) o (X_{l-1}^T X_{l-1}) for a single output.
Matrix ntk_explicit(const LayerStack& stack, const Activation& act);

// nk x nk block NTK with per-layer rates taus = (tau_1..tau_{L+1}); block
// (i, j) couples outputs i and j.
Matrix ntk_multi_explicit(const LayerStack& stack, const Activation& act,
                          std::span<const double> taus);

// r_plus Id + X_L^T X_L + sum_{l<L} q_l X_l^T X_l.
Matrix ntk_surrogate(const LayerStack& stack, const LayerConstants& constants);

// Reference NTK assembled from the explicit per-sample parameter Jacobian,
// J^T diag(tau) J. Refuses problems whose Jacobian exceeds 1e7 entries.
Matrix ntk_jacobian_oracle(const LayerStack& stack, const Activation& act,
                           std::span<const double> taus = {});

// Output `output` of the network defined by the stack's weights at input x.
double network_output(const LayerStack& stack, const Activation& act, const Eigen::VectorXd& x,
                      int output = 0);

}  // namespace ntkspec
