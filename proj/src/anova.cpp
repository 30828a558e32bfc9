// SPDX-License-Identifier: Apache-2.0

#include "rbc/anova.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

namespace rbc
{

namespace
{

std::string direction_label(const std::vector<int> &K)
{
  if (K.empty())
  {
    return "K={}";
  }
  std::string s = "K={";
  for (std::size_t k = 0; k < K.size(); k++)
  {
    s += std::to_string(K[k]);
    s += (k + 1 < K.size()) ? "," : "}";
  }
  return s;
}

std::int64_t binom64(int n, int k)
{
  if (k < 0 || k > n)
  {
    return 0;
  }
  k = std::min(k, n - k);
  std::int64_t c = 1;
  for (int i = 1; i <= k; i++)
  {
    c = c * (n - k + i) / i;
  }
  return c;
}

// Enumerate proper subsets of K (sorted), excluding K itself.
void for_each_proper_subset(const std::vector<int> &K,
                            const std::function<void(const std::vector<int> &)> &fn)
{
  const int s = static_cast<int>(K.size());
  std::vector<int> subset;
  for (unsigned mask = 0; mask + 1 < (1u << s); mask++)
  {
    subset.clear();
    for (int b = 0; b < s; b++)
    {
      if (mask & (1u << b))
      {
        subset.push_back(K[b]);
      }
    }
    fn(subset);
  }
}

bool is_subset(const std::vector<int> &S, const std::vector<int> &K)
{
  return std::includes(K.begin(), K.end(), S.begin(), S.end());
}

} // namespace

std::int64_t kappa(int M, int j, int level)
{
  if (j < 0 || j > level || level > M)
  {
    throw std::invalid_argument("kappa: need 0 <= j <= level <= M");
  }
  std::int64_t sum = 0;
  for (int r = j; r <= level; r++)
  {
    const std::int64_t term = binom64(M - j, r - j);
    sum += ((r - j) % 2 == 0) ? term : -term;
  }
  return sum;
}

int AnovaTerm::order_sum() const
{
  int s = 0;
  for (int p : orders)
  {
    s += p;
  }
  return s;
}

void AnovaState::set_anchor(const Eigen::VectorXd &full_field)
{
  AnovaTerm t;
  t.K = {};
  t.orders = {};
  t.raw_mean = full_field;
  t.raw_second = full_field.array().square();
  t.mean = full_field;
  t.gamma = std::numeric_limits<double>::infinity();
  terms_[t.K] = std::move(t);
}

const AnovaTerm &AnovaState::anchor() const
{
  return term({});
}

const AnovaTerm &AnovaState::term(const std::vector<int> &K) const
{
  auto it = terms_.find(K);
  if (it == terms_.end())
  {
    throw std::logic_error("AnovaState: term " + direction_label(K) + " not present");
  }
  return it->second;
}

AnovaTerm AnovaState::make_term(const std::vector<int> &K, const std::vector<int> &orders,
                                const std::vector<Eigen::VectorXd> &samples,
                                const std::vector<double> &weights) const
{
  if (K.empty())
  {
    throw std::invalid_argument("make_term: use set_anchor for the empty set");
  }
  if (!std::is_sorted(K.begin(), K.end()))
  {
    throw std::invalid_argument("make_term: direction set must be sorted");
  }
  if (samples.empty() || samples.size() != weights.size())
  {
    throw std::invalid_argument("make_term: one weight per sample required");
  }

  AnovaTerm t;
  t.K = K;
  t.orders = orders;
  t.raw_mean = Eigen::VectorXd::Zero(samples[0].size());
  t.raw_second = Eigen::VectorXd::Zero(samples[0].size());
  for (std::size_t k = 0; k < samples.size(); k++)
  {
    t.raw_mean += weights[k] * samples[k];
    t.raw_second += weights[k] * samples[k].array().square().matrix();
  }

  t.mean = t.raw_mean;
  for_each_proper_subset(K, [&](const std::vector<int> &S) {
    auto it = terms_.find(S);
    if (it != terms_.end())
    {
      t.mean -= it->second.mean;
    }
    else if (!was_dropped(S))
    {
      throw std::logic_error("make_term: lower-order term " + direction_label(S) +
                             " missing from the state");
    }
    // A truncated subset contributes the zero field.
  });
  return t;
}

double AnovaState::indicator(const AnovaTerm &term) const
{
  double denom = 0.0;
  const int size = static_cast<int>(term.K.size());
  for (const auto &[S, t] : terms_)
  {
    if (static_cast<int>(S.size()) < size)
    {
      denom += t.mean.norm();
    }
  }
  if (denom == 0.0)
  {
    return std::numeric_limits<double>::infinity();
  }
  return term.mean.norm() / denom;
}

double AnovaState::saturation(const AnovaTerm &candidate) const
{
  if (!candidate.has_prev)
  {
    return std::numeric_limits<double>::quiet_NaN();
  }
  // Sum of the accepted term means of order <= |K| as currently stored; the
  // candidate's direction contributes its previous value when present.
  Eigen::VectorXd total = Eigen::VectorXd::Zero(candidate.mean.size());
  const int size = static_cast<int>(candidate.K.size());
  for (const auto &[S, t] : terms_)
  {
    if (static_cast<int>(S.size()) <= size)
    {
      total += t.mean;
    }
  }
  const double denom = total.norm();
  if (denom == 0.0)
  {
    return std::numeric_limits<double>::infinity();
  }
  return (candidate.prev_mean - candidate.mean).norm() / denom;
}

void AnovaState::accept_term(AnovaTerm term)
{
  auto it = terms_.find(term.K);
  if (it != terms_.end() && !term.has_prev)
  {
    term.has_prev = true;
    term.prev_orders = it->second.orders;
    term.prev_mean = it->second.mean;
  }
  dropped_.erase(term.K);
  terms_[term.K] = std::move(term);
}

void AnovaState::drop_term(const std::vector<int> &K)
{
  terms_.erase(K);
  dropped_[K] = 1;
}

void AnovaState::restore_term(const std::vector<int> &K, const AnovaTerm *previous)
{
  if (previous != nullptr)
  {
    terms_[K] = *previous;
  }
  else
  {
    terms_.erase(K);
  }
}

std::int64_t AnovaState::combination_coefficient(const std::vector<int> &K) const
{
  // Inclusion-exclusion over accepted supersets; reduces to
  // kappa(dim, |K|, level) when every set up to the level is present.
  std::int64_t c = 0;
  for (const auto &[J, t] : terms_)
  {
    if (J.size() >= K.size() && is_subset(K, J))
    {
      c += ((J.size() - K.size()) % 2 == 0) ? 1 : -1;
    }
  }
  return c;
}

MomentFields AnovaState::combine_moments() const
{
  if (terms_.empty())
  {
    throw std::logic_error("combine_moments: state has no terms");
  }
  const Eigen::Index n = terms_.begin()->second.raw_mean.size();
  Eigen::VectorXd first = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd second = Eigen::VectorXd::Zero(n);
  for (const auto &[K, t] : terms_)
  {
    const auto c = static_cast<double>(combination_coefficient(K));
    if (c == 0.0)
    {
      continue;
    }
    first += c * t.raw_mean;
    second += c * t.raw_second;
  }

  MomentFields out;
  out.mean = first;
  Eigen::VectorXd variance = second - first.array().square().matrix();
  out.most_negative_variance = variance.size() > 0 ? std::min(0.0, variance.minCoeff()) : 0.0;
  out.sd = variance.array().max(0.0).sqrt();
  return out;
}

void AnovaState::set_index_set(int level, std::vector<std::vector<int>> sets)
{
  index_sets_[level] = std::move(sets);
}

void AnovaState::record_diagnostics(const std::vector<int> &K, int max_order, double mean_norm,
                                    double gamma, double rho, const std::string &status)
{
  TermDiagnostics d;
  d.K = K;
  d.max_order = max_order;
  d.mean_norm = mean_norm;
  d.gamma = gamma;
  d.rho = rho;
  d.status = status;
  diagnostics_[K] = std::move(d);
}

std::vector<TermDiagnostics> AnovaState::diagnostics_rows() const
{
  std::vector<TermDiagnostics> rows;
  rows.reserve(diagnostics_.size());
  for (const auto &[K, d] : diagnostics_)
  {
    rows.push_back(d);
  }
  std::sort(rows.begin(), rows.end(), [](const TermDiagnostics &a, const TermDiagnostics &b) {
    if (a.K.size() != b.K.size())
    {
      return a.K.size() < b.K.size();
    }
    return a.K < b.K;
  });
  return rows;
}

void write_anova_terms_csv(const AnovaState &state, const std::string &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << "K,p_K,mean_norm,gamma,rho,status\n";
  char buf[160];
  for (const auto &row : state.diagnostics_rows())
  {
    std::string key = direction_label(row.K);
    std::snprintf(buf, sizeof(buf), "%s,%d,%.16e,%.16e,%.16e,%s\n", key.c_str(), row.max_order,
                  row.mean_norm, row.gamma, row.rho, row.status.c_str());
    out << buf;
  }
}

} // namespace rbc
