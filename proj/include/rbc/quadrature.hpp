// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_QUADRATURE_HPP
#define RBC_QUADRATURE_HPP

#include <vector>

namespace rbc
{

enum class RuleFamily
{
  GaussLegendre,
  ClenshawCurtis
};

// 1-D quadrature rule on [a,b] in the probabilist convention: weights sum to
// one, so the rule integrates against the uniform density on [a,b].
struct Rule1D
{
  RuleFamily family;
  std::vector<double> nodes;   // strictly increasing
  std::vector<double> weights; // sum to 1

  int size() const { return static_cast<int>(nodes.size()); }
};

// p-point Gauss-Legendre rule mapped affinely to [a,b].
Rule1D gauss_legendre(int p, double a, double b);

// m-point Clenshaw-Curtis rule (Chebyshev extrema, endpoints included for
// m >= 2, midpoint for m = 1) mapped affinely to [a,b].
Rule1D clenshaw_curtis(int m, double a, double b);

Rule1D make_rule(RuleFamily family, int count, double a, double b);

// 1-D point growth used for sparse-grid levels: nested doubling for
// Clenshaw-Curtis (1, 3, 5, 9, ...), linear for Gauss-Legendre.
int rule_size_for_index(RuleFamily family, int index);

} // namespace rbc

#endif // RBC_QUADRATURE_HPP
