// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_DRIVER_HPP
#define RBC_DRIVER_HPP

#include <map>
#include <memory>
#include <string>
#include <vector>
#include "rbc/anova.hpp"
#include "rbc/reduced_basis.hpp"

namespace rbc
{

struct AdaptiveConfig
{
  double eps_rb = 1e-4;
  double eps_anova = 5e-5;
  double eps_p = 5e-5;
  int p0 = 3;
  int level0 = 2;
  int level_max = 2;
  int p_increment = 2;
  int p_max = 41; // safety cap on the per-direction refinement
  double alpha = 0.0;
  bool stronger_p_cap = false; // limit p_K by the previous level's maximum
  RuleFamily family = RuleFamily::GaussLegendre;

  void validate() const;
};

struct DirectionStats
{
  int direction = 0; // 1-based
  double mean_norm = 0.0;
  int max_order = 0;
  int basis_count = 0; // snapshots whose label is this singleton
};

struct LevelTrace
{
  int level = 0;
  int n_r = 0;
  long long visited = 0;
  MomentFields moments;
};

struct RunReport
{
  std::string mode;
  int n_r = 0;
  long long visited_points = 0;
  int full_solves = 0;
  int degenerate_rejections = 0;
  std::vector<DirectionStats> directions;
  std::map<int, std::vector<std::string>> accepted_per_level;
  std::map<int, std::vector<std::string>> excluded_per_level;
  std::vector<LevelTrace> levels;
  MomentFields moments;
  double seconds = 0.0;
};

struct DriverResult
{
  std::unique_ptr<ReducedBasis> basis;
  std::unique_ptr<AnovaState> state; // null for the sparse-grid mode
  RunReport report;
};

// Reduced-basis sweeps over sparse grids of level 0..level_max; moments from
// the final level's combination weights.
DriverResult run_sparse_grid(const AffineSystem &system, RuleFamily family, int level_max,
                             double eps_rb, double alpha = 0.0);

// Level loop at fixed polynomial order with optional truncation of the next
// level's index sets by the term indicator.
DriverResult run_fixed_anova(const AffineSystem &system, int level_max, int p, double eps_rb,
                             double eps_anova, double alpha = 0.0);

// Two-stage adaptivity: effective dimensions by the term indicator, then
// per-direction order refinement until the basis stops growing, the term
// drops below the truncation tolerance, or the saturation measure converges.
DriverResult run_adaptive(const AffineSystem &system, const AdaptiveConfig &config);

void write_directions_csv(const RunReport &report, const std::string &path);

} // namespace rbc

#endif // RBC_DRIVER_HPP
