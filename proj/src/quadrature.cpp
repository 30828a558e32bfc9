// SPDX-License-Identifier: Apache-2.0

#include "rbc/quadrature.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <Eigen/Dense>

namespace rbc
{

namespace
{

void map_to_interval(Rule1D &rule, double a, double b)
{
  if (!(b > a))
  {
    throw std::invalid_argument("quadrature: interval must satisfy a < b");
  }
  for (double &x : rule.nodes)
  {
    x = 0.5 * (a + b) + 0.5 * (b - a) * x;
  }
}

} // namespace

Rule1D gauss_legendre(int p, double a, double b)
{
  if (p < 1)
  {
    throw std::invalid_argument("gauss_legendre: need at least one point");
  }

  Rule1D rule;
  rule.family = RuleFamily::GaussLegendre;
  rule.nodes.resize(p);
  rule.weights.resize(p);

  if (p == 1)
  {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
  }
  else
  {
    // Golub-Welsch: eigenvalues of the symmetric Jacobi matrix give the
    // nodes, squared first eigenvector components the weights.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(p, p);
    for (int k = 1; k < p; k++)
    {
      const double beta = k / std::sqrt(4.0 * k * k - 1.0);
      J(k, k - 1) = beta;
      J(k - 1, k) = beta;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    for (int i = 0; i < p; i++)
    {
      rule.nodes[i] = es.eigenvalues()[i];
      const double v0 = es.eigenvectors()(0, i);
      rule.weights[i] = v0 * v0; // probabilist: the standard 2*v0^2 halved
    }
    // Symmetrize against eigensolver round-off.
    for (int i = 0; i < p / 2; i++)
    {
      const int j = p - 1 - i;
      const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
      rule.nodes[i] = -x;
      rule.nodes[j] = x;
      const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
      rule.weights[i] = w;
      rule.weights[j] = w;
    }
    if (p % 2 == 1)
    {
      rule.nodes[p / 2] = 0.0;
    }
  }

  map_to_interval(rule, a, b);
  return rule;
}

Rule1D clenshaw_curtis(int m, double a, double b)
{
  if (m < 1)
  {
    throw std::invalid_argument("clenshaw_curtis: need at least one point");
  }

  Rule1D rule;
  rule.family = RuleFamily::ClenshawCurtis;
  rule.nodes.resize(m);
  rule.weights.resize(m);

  if (m == 1)
  {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
  }
  else
  {
    const int n = m - 1;
    for (int j = 0; j <= n; j++)
    {
      // -cos gives ascending nodes; theta = j*pi/n reduces exactly for the
      // nested levels so coincident points merge bitwise.
      rule.nodes[j] = -std::cos(j * std::numbers::pi / n);
      double s = 0.0;
      for (int k = 1; k <= n / 2; k++)
      {
        const double bk = (2 * k == n) ? 1.0 : 2.0;
        s += bk / (4.0 * k * k - 1.0) * std::cos(2.0 * k * j * std::numbers::pi / n);
      }
      const double cj = (j == 0 || j == n) ? 1.0 : 2.0;
      rule.weights[j] = 0.5 * cj / n * (1.0 - s); // probabilist scaling
    }
    if (m % 2 == 1)
    {
      rule.nodes[n / 2] = 0.0;
    }
  }

  map_to_interval(rule, a, b);
  return rule;
}

Rule1D make_rule(RuleFamily family, int count, double a, double b)
{
  return family == RuleFamily::GaussLegendre ? gauss_legendre(count, a, b)
                                             : clenshaw_curtis(count, a, b);
}

int rule_size_for_index(RuleFamily family, int index)
{
  if (index < 1)
  {
    throw std::invalid_argument("rule_size_for_index: index starts at 1");
  }
  if (family == RuleFamily::GaussLegendre)
  {
    return index;
  }
  return index == 1 ? 1 : (1 << (index - 1)) + 1;
}

} // namespace rbc
