// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include "rbc/driver.hpp"

using namespace rbc;

namespace
{

const std::array<double, 2> kVelocity = {std::sin(std::numbers::pi / 6.0),
                                         std::cos(std::numbers::pi / 6.0)};

AffineSystem make_system(int n, int sx, int sy, double nu, double lo = 0.01, double hi = 1.0)
{
  const ParamBox box(sx * sy, lo, hi);
  return build_benchmark(build_mesh(n, sx, sy), nu, kVelocity, box);
}

} // namespace

TEST_CASE("sparse-grid mode in one dimension is quadrature refinement")
{
  // M = 1 via a 1x1 partition.
  const AffineSystem sys = make_system(8, 1, 1, 0.5);
  const DriverResult res = run_sparse_grid(sys, RuleFamily::GaussLegendre, 2, 1e-12);

  // Level l sweeps the (l+1)-point rule; with the tight tolerance every node
  // is solved in full, so the mean is the plain quadrature of snapshots.
  const Rule1D rule = gauss_legendre(3, 0.01, 1.0);
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(sys.mesh().num_nodes());
  for (int k = 0; k < rule.size(); k++)
  {
    direct += rule.weights[k] * sys.full_solve(Eigen::VectorXd::Constant(1, rule.nodes[k])).full;
  }
  CHECK((res.report.levels.back().moments.mean - direct).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(res.report.levels.size() == 3);
  CHECK(res.report.n_r <= res.report.visited_points + 1);
}

TEST_CASE("sparse-grid level zero visits the base point only")
{
  const AffineSystem sys = make_system(8, 2, 2, 0.5);
  const DriverResult res = run_sparse_grid(sys, RuleFamily::ClenshawCurtis, 0, 1e-6);
  CHECK(res.report.visited_points == 1);
  CHECK(res.report.n_r == 1);
}

TEST_CASE("fixed mode level-one point budget")
{
  const AffineSystem sys = make_system(8, 2, 2, 0.5);
  const DriverResult res = run_fixed_anova(sys, 1, 5, 1e-6, 1e-15);
  // 1 anchor + M * p points at most.
  CHECK(res.report.visited_points == 1 + 4 * 5);
  CHECK(res.state->terms().size() == 5); // anchor + 4 singletons
  CHECK(res.report.n_r <= res.report.visited_points + 1);
  CHECK(res.basis->orthonormality_defect() <= 1e-10);
}

TEST_CASE("degenerate parameter box ends after the initial level")
{
  // A vanishingly small box stands in for a deterministic problem: every
  // snapshot coincides with the anchor, nothing augments the basis.
  const AffineSystem sys = make_system(8, 2, 2, 0.5, 0.49999999999, 0.50000000001);
  AdaptiveConfig cfg;
  cfg.eps_rb = 1e-4;
  cfg.eps_anova = 5e-5;
  cfg.eps_p = 5e-5;
  cfg.level0 = 1;
  cfg.level_max = 3;
  const DriverResult res = run_adaptive(sys, cfg);
  CHECK(res.report.n_r == 1);
  for (const auto &row : res.state->diagnostics_rows())
  {
    CHECK(row.gamma < 1e-6);
  }
  // Nothing seeds level 2.
  CHECK(res.report.visited_points == 1 + 4 * cfg.p0);
}

TEST_CASE("huge truncation tolerance blocks the second level")
{
  const AffineSystem sys = make_system(8, 2, 2, 0.05);
  AdaptiveConfig cfg;
  cfg.eps_rb = 1e-6;
  cfg.eps_anova = 1e6;
  cfg.eps_p = 1e-9;
  cfg.level0 = 1;
  cfg.level_max = 2;
  const DriverResult res = run_adaptive(sys, cfg);
  for (const auto &[K, t] : res.state->terms())
  {
    CHECK(K.size() <= 1);
  }
  // Every singleton was dropped at its first visit.
  CHECK(res.report.visited_points == 1 + 4 * cfg.p0);
  CHECK(res.report.accepted_per_level.at(1).empty());
}

TEST_CASE("tolerance monotonicity across the ladder")
{
  const AffineSystem sys = make_system(16, 1, 4, 0.05);
  int previous = 0;
  for (double exponent : {-2.5, -3.0, -3.5, -4.0})
  {
    const double eps = std::pow(10.0, exponent);
    const DriverResult res = run_fixed_anova(sys, 2, 5, eps, 1e-15);
    CHECK(res.report.n_r >= previous);
    previous = res.report.n_r;
  }
}

TEST_CASE("adaptive visits no more points than the fixed budget")
{
  const AffineSystem sys = make_system(16, 2, 2, 0.05);
  AdaptiveConfig cfg;
  cfg.eps_rb = 1e-3;
  cfg.eps_anova = 5e-4;
  cfg.eps_p = 5e-4;
  cfg.level0 = 2;
  cfg.level_max = 2;
  const DriverResult res = run_adaptive(sys, cfg);

  int p_reached = cfg.p0;
  for (const auto &row : res.state->diagnostics_rows())
  {
    p_reached = std::max(p_reached, row.max_order);
  }
  CHECK(res.report.visited_points <=
        static_cast<long long>(count_points(4, 2, p_reached)));
  CHECK(res.report.n_r <= res.report.visited_points + 1);

  // The adaptive run must populate per-direction stats.
  REQUIRE(res.report.directions.size() == 4);
  for (const auto &d : res.report.directions)
  {
    CHECK(d.max_order >= cfg.p0);
  }
}

TEST_CASE("adaptive exclusions restore the prior state")
{
  // With a huge saturation tolerance every revisit saturates immediately, so
  // each term is computed at p0, refined once, then restored; the restored
  // term must be the p0 version.
  const AffineSystem sys = make_system(8, 2, 2, 0.5);
  AdaptiveConfig cfg;
  cfg.eps_rb = 1e-8;
  cfg.eps_anova = 1e-12;
  cfg.eps_p = 1e9;
  cfg.level0 = 1;
  cfg.level_max = 1;
  const DriverResult res = run_adaptive(sys, cfg);
  for (const auto &[K, t] : res.state->terms())
  {
    if (K.empty())
    {
      continue;
    }
    CHECK(t.orders == std::vector<int>(K.size(), cfg.p0));
  }
}

TEST_CASE("directions csv")
{
  const AffineSystem sys = make_system(8, 2, 2, 0.5);
  const DriverResult res = run_fixed_anova(sys, 1, 3, 1e-4, 1e-15);
  write_directions_csv(res.report, "directions_test.csv");
  std::ifstream in("directions_test.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "j,mean_norm,p_j,n_r_j");
  int rows = 0;
  int nrj_sum = 0;
  while (std::getline(in, line))
  {
    rows++;
    const auto last = line.rfind(',');
    nrj_sum += std::stoi(line.substr(last + 1));
  }
  CHECK(rows == 4);
  CHECK(nrj_sum <= res.report.n_r);
  std::remove("directions_test.csv");
}
