#pragma once

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace ntkspec {

using ScalarFunction = std::function<double(double)>;

// Quadrature order used for every Gaussian moment of an activation.
inline constexpr int kActivationQuadratureNodes = 200;

// A twice-differentiable activation normalized so that E[s(xi)] = 0 and
// E[s(xi)^2] = 1 for xi ~ N(0,1), together with its Gaussian moments
//   b_sigma = E[s'(xi)],  a_sigma = E[s'(xi)^2].
// lambda_sigma is a declared bound on |s'| and |s''|; it is never estimated.
// Values are immutable and safe to share between threads.
class Activation {
 public:
  double operator()(double x) const { return (raw_(x) - shift_) / scale_; }
  double derivative(double x) const { return raw_deriv_(x) / scale_; }

  double b_sigma() const { return b_sigma_; }
  double a_sigma() const { return a_sigma_; }
  double lambda_sigma() const { return lambda_sigma_; }
  const std::string& name() const { return name_; }

  // Affine map applied to the raw function: s(x) = (raw(x) - shift) / scale.
  double shift() const { return shift_; }
  double scale() const { return scale_; }

  // Set for activations outside the smooth class (e.g. relu) that were
  // admitted through the unsafe override.
  bool unsafe() const { return unsafe_; }

 private:
  friend Activation normalize_activation(ScalarFunction, ScalarFunction, double, std::string);
  friend Activation builtin_activation(std::string_view, bool);

  ScalarFunction raw_;
  ScalarFunction raw_deriv_;
  double shift_ = 0.0;
  double scale_ = 1.0;
  double b_sigma_ = 0.0;
  double a_sigma_ = 0.0;
  double lambda_sigma_ = 0.0;
  std::string name_;
  bool unsafe_ = false;
};

// Centers and rescales `raw` under the standard Gaussian and computes
// b_sigma, a_sigma by quadrature. `lambda_hint` bounds |raw'| and |raw''|;
// the stored lambda_sigma is rescaled along with the function.
// Throws DegenerateActivationError when Var[raw(xi)] <= 1e-14.
Activation normalize_activation(ScalarFunction raw, ScalarFunction raw_deriv, double lambda_hint,
                                std::string name = "custom");

// identity, atan, tanh, sigmoid-centered, cos-centered. `relu` is accepted
// only with allow_unsafe.
Activation builtin_activation(std::string_view name, bool allow_unsafe = false);
std::vector<std::string> builtin_activation_names();

// Activation interpolated by a natural cubic spline through (xs, ys),
// extended linearly outside the table. Approximate by construction.
Activation activation_from_table(std::vector<double> xs, std::vector<double> ys,
                                 double lambda_hint, std::string name = "table");
// Two-column CSV: x, raw(x). A non-numeric first line is treated as a header.
Activation activation_from_table_file(const std::string& path, double lambda_hint);

// q_l = (b^2)^(L-l), r_l = a^(L-l) for l = 0..L-1, and
// r_plus = sum_l (r_l - q_l).
struct LayerConstants {
  std::vector<double> q;
  std::vector<double> r;
  double r_plus = 0.0;
};

LayerConstants layer_constants(double b_sigma, double a_sigma, int L);
LayerConstants layer_constants(const Activation& act, int L);

}  // namespace ntkspec
