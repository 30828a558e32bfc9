// SPDX-License-Identifier: Apache-2.0

#include "rbc/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>

namespace rbc
{

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

MomentFields weighted_moments(const std::vector<Vector> &fields,
                              const std::vector<double> &weights)
{
  MomentFields out;
  out.mean = Eigen::VectorXd::Zero(fields[0].size());
  Eigen::VectorXd second = Eigen::VectorXd::Zero(fields[0].size());
  for (std::size_t k = 0; k < fields.size(); k++)
  {
    out.mean += weights[k] * fields[k];
    second += weights[k] * fields[k].array().square().matrix();
  }
  Eigen::VectorXd variance = second - out.mean.array().square().matrix();
  out.most_negative_variance = std::min(0.0, variance.minCoeff());
  out.sd = variance.array().max(0.0).sqrt();
  return out;
}

std::vector<std::vector<int>> all_subsets_of_size(int M, int size)
{
  std::vector<std::vector<int>> sets;
  std::vector<int> cur;
  std::function<void(int)> gen = [&](int next) {
    if (static_cast<int>(cur.size()) == size)
    {
      sets.push_back(cur);
      return;
    }
    for (int m = next; m <= M; m++)
    {
      cur.push_back(m);
      gen(m + 1);
      cur.pop_back();
    }
  };
  gen(1);
  return sets;
}

// Next-level candidates as unions of pairs of effective sets, enumerated in
// the given (indicator-sorted) order.
std::vector<std::vector<int>> union_candidates(const std::vector<std::vector<int>> &effective,
                                               int target_size)
{
  std::vector<std::vector<int>> next;
  std::set<std::vector<int>> seen;
  for (std::size_t a = 0; a < effective.size(); a++)
  {
    for (std::size_t b = a + 1; b < effective.size(); b++)
    {
      std::vector<int> u;
      std::set_union(effective[a].begin(), effective[a].end(), effective[b].begin(),
                     effective[b].end(), std::back_inserter(u));
      if (static_cast<int>(u.size()) == target_size && seen.insert(u).second)
      {
        next.push_back(std::move(u));
      }
    }
  }
  return next;
}

void fill_direction_stats(const AffineSystem &system, const ReducedBasis &rb,
                          const AnovaState *state, RunReport &report)
{
  const int M = system.dim();
  report.directions.assign(M, DirectionStats{});
  for (int j = 1; j <= M; j++)
  {
    auto &d = report.directions[j - 1];
    d.direction = j;
    const std::string label = direction_set_label({j});
    for (const auto &rec : rb.ledger())
    {
      if (rec.label == label)
      {
        d.basis_count++;
      }
    }
    if (state != nullptr)
    {
      if (state->has_term({j}))
      {
        d.mean_norm = state->term({j}).mean.norm();
      }
      for (const auto &row : state->diagnostics_rows())
      {
        if (row.K == std::vector<int>{j})
        {
          d.max_order = row.max_order;
          if (d.mean_norm == 0.0)
          {
            d.mean_norm = row.mean_norm;
          }
        }
      }
    }
  }
}

} // namespace

void AdaptiveConfig::validate() const
{
  if (!(eps_rb > 0.0) || !(eps_anova > 0.0) || !(eps_p > 0.0))
  {
    throw std::invalid_argument("AdaptiveConfig: tolerances must be positive");
  }
  if (p0 < 1 || p0 % 2 == 0)
  {
    throw std::invalid_argument("AdaptiveConfig: p0 must be odd and positive");
  }
  if (p_increment < 1)
  {
    throw std::invalid_argument("AdaptiveConfig: p increment must be at least 1");
  }
  if (level0 < 1 || level_max < level0)
  {
    throw std::invalid_argument("AdaptiveConfig: need 1 <= level0 <= level_max");
  }
  if (alpha < 0.0 || alpha > 1.0)
  {
    throw std::invalid_argument("AdaptiveConfig: alpha must lie in [0,1]");
  }
}

DriverResult run_sparse_grid(const AffineSystem &system, RuleFamily family, int level_max,
                             double eps_rb, double alpha)
{
  if (level_max < 0)
  {
    throw std::invalid_argument("run_sparse_grid: level_max must be nonnegative");
  }
  const auto start = Clock::now();

  DriverResult result;
  result.basis = std::make_unique<ReducedBasis>(system);
  ReducedBasis &rb = *result.basis;
  RunReport &rep = result.report;
  rep.mode = "sparse_grid";

  IndicatorConfig cfg;
  cfg.alpha = alpha;
  cfg.density = system.box().density();

  for (int level = 0; level <= level_max; level++)
  {
    const PointSet pts = sparse_grid(system.dim(), level, family, system.box());
    const SweepResult sweep = rbm_update(rb, pts, eps_rb, cfg);
    rep.visited_points += pts.size();
    rep.full_solves += sweep.full_solves;
    rep.degenerate_rejections += sweep.degenerate_rejections;

    LevelTrace trace;
    trace.level = level;
    trace.n_r = rb.size();
    trace.visited = rep.visited_points;
    trace.moments = weighted_moments(sweep.fields, pts.weights);
    rep.levels.push_back(std::move(trace));
  }

  rep.n_r = rb.size();
  rep.moments = rep.levels.back().moments;
  fill_direction_stats(system, rb, nullptr, rep);
  rep.seconds = seconds_since(start);
  return result;
}

DriverResult run_fixed_anova(const AffineSystem &system, int level_max, int p, double eps_rb,
                             double eps_anova, double alpha)
{
  if (level_max < 1 || p < 1)
  {
    throw std::invalid_argument("run_fixed_anova: need level_max >= 1 and p >= 1");
  }
  const auto start = Clock::now();

  DriverResult result;
  result.basis = std::make_unique<ReducedBasis>(system);
  result.state = std::make_unique<AnovaState>(system.dim(), eps_anova);
  ReducedBasis &rb = *result.basis;
  AnovaState &state = *result.state;
  RunReport &rep = result.report;
  rep.mode = "fixed_anova";

  IndicatorConfig cfg;
  cfg.alpha = alpha;
  cfg.density = system.box().density();
  const Eigen::VectorXd anchor_pt = system.box().anchor();

  const Snapshot anchor = system.full_solve(anchor_pt);
  rb.append_snapshot(anchor, "anchor");
  rb.append_presentation({0});
  state.set_anchor(anchor.full);
  rep.visited_points = 1;
  rep.full_solves = 1;

  std::vector<std::vector<int>> candidates = all_subsets_of_size(system.dim(), 1);
  for (int level = 1; level <= level_max && !candidates.empty(); level++)
  {
    state.set_level(level);
    std::vector<double> gammas;
    std::vector<std::vector<int>> groups;
    for (const auto &K : candidates)
    {
      const std::vector<int> orders(K.size(), p);
      const PointSet pts = anova_points(K, orders, anchor_pt, system.box());
      const SweepResult sweep = rbm_update(rb, pts, eps_rb, cfg);
      rep.visited_points += pts.size();
      rep.full_solves += sweep.full_solves;
      rep.degenerate_rejections += sweep.degenerate_rejections;

      AnovaTerm term = state.make_term(K, orders, sweep.fields, pts.weights);
      term.gamma = state.indicator(term);
      gammas.push_back(term.gamma);
      groups.push_back(sweep.new_columns);
      state.record_diagnostics(K, p, term.mean.norm(), term.gamma, term.rho, "accepted");
      state.accept_term(std::move(term));
      rep.accepted_per_level[level].push_back(direction_set_label(K));
    }

    // Indicator sort of the level's snapshot groups and index list.
    const std::vector<int> order = sort_by_indicator(gammas);
    std::vector<std::vector<int>> sorted_sets;
    for (int idx : order)
    {
      rb.append_presentation(groups[idx]);
      sorted_sets.push_back(candidates[idx]);
    }
    state.set_index_set(level, sorted_sets);

    std::vector<std::vector<int>> effective;
    for (const auto &K : sorted_sets)
    {
      if (state.term(K).gamma > eps_anova)
      {
        effective.push_back(K);
      }
      else
      {
        rep.excluded_per_level[level].push_back(direction_set_label(K));
      }
    }

    LevelTrace trace;
    trace.level = level;
    trace.n_r = rb.size();
    trace.visited = rep.visited_points;
    trace.moments = state.combine_moments();
    rep.levels.push_back(std::move(trace));

    candidates = level < level_max ? union_candidates(effective, level + 1)
                                   : std::vector<std::vector<int>>{};
  }

  rep.n_r = rb.size();
  rep.moments = state.combine_moments();
  fill_direction_stats(system, rb, &state, rep);
  rep.seconds = seconds_since(start);
  return result;
}

DriverResult run_adaptive(const AffineSystem &system, const AdaptiveConfig &config)
{
  config.validate();
  const auto start = Clock::now();

  DriverResult result;
  result.basis = std::make_unique<ReducedBasis>(system);
  result.state = std::make_unique<AnovaState>(system.dim(), config.eps_anova);
  ReducedBasis &rb = *result.basis;
  AnovaState &state = *result.state;
  RunReport &rep = result.report;
  rep.mode = "adaptive";

  IndicatorConfig cfg;
  cfg.alpha = config.alpha;
  cfg.density = system.box().density();
  const Eigen::VectorXd anchor_pt = system.box().anchor();

  const Snapshot anchor = system.full_solve(anchor_pt);
  rb.append_snapshot(anchor, "anchor");
  rb.append_presentation({0});
  state.set_anchor(anchor.full);
  rep.visited_points = 1;
  rep.full_solves = 1;

  struct ActiveTerm
  {
    std::vector<int> K;
    int p;
  };
  std::vector<ActiveTerm> active;
  for (int size = 1; size <= config.level0; size++)
  {
    for (auto &K : all_subsets_of_size(system.dim(), size))
    {
      active.push_back({std::move(K), config.p0});
    }
  }

  // Last visited order per direction set, for reporting and the level cap.
  std::map<std::vector<int>, int> reached_order;

  for (int level = config.level0; level <= config.level_max; level++)
  {
    while (!active.empty())
    {
      // One refinement pass over the currently active sets.
      const std::vector<ActiveTerm> pass = active;
      std::vector<double> pass_gammas;
      std::vector<std::vector<int>> pass_groups;
      std::set<std::vector<int>> excluded_now;

      for (const auto &entry : pass)
      {
        const std::vector<int> &K = entry.K;
        const std::vector<int> orders(K.size(), entry.p);

        // Stash for the exclusion rollback.
        const bool had_term = state.has_term(K);
        const AnovaTerm previous = had_term ? state.term(K) : AnovaTerm{};
        const auto mark = rb.mark();

        const PointSet pts = anova_points(K, orders, anchor_pt, system.box());
        const SweepResult sweep = rbm_update(rb, pts, config.eps_rb, cfg);
        rep.visited_points += pts.size();
        rep.full_solves += sweep.full_solves;
        rep.degenerate_rejections += sweep.degenerate_rejections;

        AnovaTerm term = state.make_term(K, orders, sweep.fields, pts.weights);
        term.gamma = state.indicator(term);
        if (had_term)
        {
          term.has_prev = true;
          term.prev_orders = previous.orders;
          term.prev_mean = previous.mean;
        }
        const double rho = state.saturation(term);
        term.rho = rho;

        const bool basis_unchanged = sweep.new_columns.empty();
        const bool gamma_small = term.gamma < config.eps_anova;
        const bool saturated = std::isfinite(rho) && rho < config.eps_p;

        pass_gammas.push_back(term.gamma);
        reached_order[K] = entry.p;

        if (basis_unchanged || gamma_small || saturated)
        {
          const char *reason =
              basis_unchanged ? "converged" : (gamma_small ? "dropped" : "saturated");
          state.record_diagnostics(K, entry.p, term.mean.norm(), term.gamma, rho, reason);
          rb.rollback(mark);
          if (had_term)
          {
            state.restore_term(K, &previous);
          }
          else
          {
            state.drop_term(K);
          }
          excluded_now.insert(K);
          rep.excluded_per_level[level].push_back(direction_set_label(K));
          pass_groups.emplace_back(); // columns were rolled back
        }
        else
        {
          state.record_diagnostics(K, entry.p, term.mean.norm(), term.gamma, rho, "accepted");
          state.accept_term(std::move(term));
          pass_groups.push_back(sweep.new_columns);
        }
      }

      // Per-pass indicator sort of the snapshot ledger (Q is unchanged).
      const std::vector<int> order = sort_by_indicator(pass_gammas);
      for (int idx : order)
      {
        rb.append_presentation(pass_groups[idx]);
      }

      // Update the active list: drop exclusions, bump surviving orders.
      std::vector<ActiveTerm> next;
      for (const auto &entry : pass)
      {
        if (excluded_now.count(entry.K))
        {
          continue;
        }
        int p_next = entry.p + config.p_increment;
        bool keep = p_next <= config.p_max;
        if (keep && config.stronger_p_cap && static_cast<int>(entry.K.size()) == level &&
            level > 1)
        {
          int cap = 0;
          for (const auto &[S, pr] : reached_order)
          {
            if (static_cast<int>(S.size()) == level - 1)
            {
              cap = std::max(cap, pr);
            }
          }
          if (cap > 0 && p_next > cap)
          {
            keep = false;
          }
        }
        if (keep)
        {
          next.push_back({entry.K, p_next});
        }
        else
        {
          rep.excluded_per_level[level].push_back(direction_set_label(entry.K) + ":order_cap");
        }
      }
      active = std::move(next);
    }

    // Effective dimensions of this level seed the next one.
    std::vector<std::pair<double, std::vector<int>>> effective;
    for (const auto &row : state.diagnostics_rows())
    {
      if (static_cast<int>(row.K.size()) == level && row.gamma > config.eps_anova)
      {
        effective.emplace_back(row.gamma, row.K);
      }
    }
    std::stable_sort(effective.begin(), effective.end(),
                     [](const auto &a, const auto &b) { return a.first > b.first; });
    std::vector<std::vector<int>> effective_sets;
    for (auto &[g, K] : effective)
    {
      effective_sets.push_back(K);
      rep.accepted_per_level[level].push_back(direction_set_label(K));
    }
    state.set_index_set(level, effective_sets);
    state.set_level(level);

    LevelTrace trace;
    trace.level = level;
    trace.n_r = rb.size();
    trace.visited = rep.visited_points;
    trace.moments = state.combine_moments();
    rep.levels.push_back(std::move(trace));

    if (level < config.level_max)
    {
      for (auto &K : union_candidates(effective_sets, level + 1))
      {
        active.push_back({std::move(K), config.p0});
      }
    }
  }

  rep.n_r = rb.size();
  rep.moments = state.combine_moments();
  fill_direction_stats(system, rb, &state, rep);
  rep.seconds = seconds_since(start);
  return result;
}

void write_directions_csv(const RunReport &report, const std::string &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << "j,mean_norm,p_j,n_r_j\n";
  char buf[96];
  for (const auto &d : report.directions)
  {
    std::snprintf(buf, sizeof(buf), "%d,%.16e,%d,%d\n", d.direction, d.mean_norm, d.max_order,
                  d.basis_count);
    out << buf;
  }
}

} // namespace rbc
