#pragma once

#include <functional>
#include <vector>

namespace ntkspec {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite rule for the standard normal measure (probabilists'
// weight e^{-x^2/2}/sqrt(2 pi)); weights sum to one. Rules are built by
// Golub-Welsch and cached per order.
const QuadratureRule& gauss_hermite_rule(int nodes);

// E[f(xi)] for xi ~ N(0,1). Throws NumericError naming the offending node
// if f is not finite there.
double gaussian_moment(const std::function<double(double)>& f, int nodes = 200);

}  // namespace ntkspec
