#include "ntkspec/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "ntkspec/errors.hpp"

namespace ntkspec {

namespace {

QuadratureRule build_hermite(int n) {
  // Jacobi matrix of the monic probabilists' Hermite recurrence:
  // He_{k+1} = x He_k - k He_{k-1}.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n - 1);
  for (int k = 1; k < n; ++k) sub(k - 1) = std::sqrt(static_cast<double>(k));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("Gauss-Hermite eigensolve failed");

  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = solver.eigenvalues()(i);
    const double v0 = solver.eigenvectors()(0, i);
    rule.weights[i] = v0 * v0;
  }
  // Symmetrize: the rule is exactly symmetric about zero.
  for (int i = 0; i < n / 2; ++i) {
    const int j = n - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const QuadratureRule& gauss_hermite_rule(int nodes) {
  if (nodes < 2) throw InvalidArgument("Gauss-Hermite rule needs at least 2 nodes");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[nodes];
  if (!slot) slot = std::make_unique<QuadratureRule>(build_hermite(nodes));
  return *slot;
}

double gaussian_moment(const std::function<double(double)>& f, int nodes) {
  const QuadratureRule& rule = gauss_hermite_rule(nodes);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double value = f(rule.nodes[i]);
    if (!std::isfinite(value)) {
      std::ostringstream msg;
      msg << "non-finite integrand value " << value << " at quadrature node x=" << rule.nodes[i];
      throw NumericError(msg.str());
    }
    sum += static_cast<long double>(rule.weights[i]) * value;
  }
  return static_cast<double>(sum);
}

}  // namespace ntkspec
