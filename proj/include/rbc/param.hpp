// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_PARAM_HPP
#define RBC_PARAM_HPP

#include <stdexcept>
#include <vector>
#include <Eigen/Dense>

namespace rbc
{

// Parameter box Gamma = prod [lo_m, hi_m] with the uniform product density.
struct ParamBox
{
  std::vector<double> lo, hi;

  ParamBox() = default;
  ParamBox(int dim, double a, double b) : lo(dim, a), hi(dim, b)
  {
    if (!(b > a))
    {
      throw std::invalid_argument("ParamBox: need a < b");
    }
  }

  int dim() const { return static_cast<int>(lo.size()); }

  // Anchor at the mean of the uniform density.
  Eigen::VectorXd anchor() const
  {
    Eigen::VectorXd c(dim());
    for (int m = 0; m < dim(); m++)
    {
      c[m] = 0.5 * (lo[m] + hi[m]);
    }
    return c;
  }

  bool contains(const Eigen::VectorXd &xi, double rel_tol = 1e-12) const
  {
    if (xi.size() != dim())
    {
      return false;
    }
    for (int m = 0; m < dim(); m++)
    {
      const double slack = rel_tol * std::max(1.0, std::abs(hi[m]) + std::abs(lo[m]));
      if (xi[m] < lo[m] - slack || xi[m] > hi[m] + slack)
      {
        return false;
      }
    }
    return true;
  }

  // Value of the uniform joint density (constant on the box).
  double density() const
  {
    double d = 1.0;
    for (int m = 0; m < dim(); m++)
    {
      d /= (hi[m] - lo[m]);
    }
    return d;
  }
};

} // namespace rbc

#endif // RBC_PARAM_HPP
