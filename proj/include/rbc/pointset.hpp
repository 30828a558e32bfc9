// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_POINTSET_HPP
#define RBC_POINTSET_HPP

#include <cstdint>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include "rbc/param.hpp"
#include "rbc/quadrature.hpp"

namespace rbc
{

// Collocation points with quadrature weights. Sparse-grid weights carry the
// signed Smolyak combination coefficients; points duplicated across tensor
// grids are merged with weight accumulation (coordinates quantized at 1e-12).
struct PointSet
{
  int dim = 0;
  std::vector<Eigen::VectorXd> points;
  std::vector<double> weights;
  std::vector<std::string> labels; // generating multi-index or direction set

  int size() const { return static_cast<int>(points.size()); }
  double weight_sum() const;
};

// Smolyak sparse grid of the given level: union of anisotropic tensor grids
// over multi-indices l+1 <= |i| <= l+M with combination weights
// (-1)^(l+M-|i|) * binom(M-1, l+M-|i|).
PointSet sparse_grid(int dim, int level, RuleFamily family, const ParamBox &box);

// Tensor Gauss-Legendre points in the directions of K (1-based), anchored at
// c elsewhere. orders[j] is the point count for direction K[j].
PointSet anova_points(const std::vector<int> &K, const std::vector<int> &orders,
                      const Eigen::VectorXd &anchor, const ParamBox &box,
                      RuleFamily family = RuleFamily::GaussLegendre);

// Number of PCM-ANOVA points up to the given level at uniform order p:
// sum_{l=0}^{level} binom(M,l) p^l.
std::uint64_t count_points(int dim, int level, int p);

// Alternate reporting convention: p-1 points per direction and no anchor
// term, i.e. sum_{l=1}^{level} binom(M,l) (p-1)^l.
std::uint64_t count_points_fresh(int dim, int level, int p);

// Halton sequence with the first dim primes as bases, indices starting at 1,
// mapped affinely into the box.
std::vector<Eigen::VectorXd> halton(int dim, int count, const ParamBox &box);

void write_points_csv(const PointSet &set, const std::string &path);

std::string direction_set_label(const std::vector<int> &K);

} // namespace rbc

#endif // RBC_POINTSET_HPP
