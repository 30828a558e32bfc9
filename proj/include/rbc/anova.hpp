// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_ANOVA_HPP
#define RBC_ANOVA_HPP

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>
#include <Eigen/Dense>

namespace rbc
{

// Signed multiplicity of an anchored sample of order j in the expansion
// truncated at the given level:
//   kappa(M, j, level) = sum_{r=j}^{level} (-1)^(r-j) binom(M-j, r-j).
std::int64_t kappa(int M, int j, int level);

// One anchored interaction term. Fields are full nodal vectors; raw moments
// are the plain quadrature sums over the term's tensor points, the mean field
// subtracts the lower-order terms.
struct AnovaTerm
{
  std::vector<int> K;      // sorted 1-based directions; empty for the anchor
  std::vector<int> orders; // per-direction point counts, aligned with K
  Eigen::VectorXd raw_mean;
  Eigen::VectorXd raw_second;
  Eigen::VectorXd mean; // E[u_K] = raw_mean - sum of lower-order means
  double gamma = 0.0;
  double rho = std::numeric_limits<double>::quiet_NaN(); // last saturation value

  // Previous-order mean retained for the saturation measure.
  bool has_prev = false;
  std::vector<int> prev_orders;
  Eigen::VectorXd prev_mean;

  int order_sum() const;
};

struct MomentFields
{
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;
  double most_negative_variance = 0.0; // largest clamped excursion (<= 0)
};

// Per-term bookkeeping row for diagnostics output.
struct TermDiagnostics
{
  std::vector<int> K;
  int max_order = 0;
  double mean_norm = 0.0;
  double gamma = 0.0;
  double rho = std::numeric_limits<double>::quiet_NaN();
  std::string status = "accepted"; // accepted | converged | dropped
};

// Anchored-ANOVA decomposition state: the anchor term, accepted interaction
// terms keyed by direction set, active index sets per level, and the record
// of terms that were dropped by the truncation indicator.
class AnovaState
{
public:
  AnovaState(int dim, double eps_anova) : dim_(dim), eps_anova_(eps_anova) {}

  int dim() const { return dim_; }
  double eps_anova() const { return eps_anova_; }
  int level() const { return level_; }
  void set_level(int level) { level_ = std::max(level_, level); }

  void set_anchor(const Eigen::VectorXd &full_field);
  const AnovaTerm &anchor() const;

  bool has_term(const std::vector<int> &K) const { return terms_.count(K) > 0; }
  const AnovaTerm &term(const std::vector<int> &K) const;
  const std::map<std::vector<int>, AnovaTerm> &terms() const { return terms_; }

  // Quadrature means over the given samples plus the subtraction recursion.
  // Proper subsets must be present unless they were explicitly dropped by the
  // truncation (their contribution is then zero); a never-computed subset is
  // a structural error.
  AnovaTerm make_term(const std::vector<int> &K, const std::vector<int> &orders,
                      const std::vector<Eigen::VectorXd> &samples,
                      const std::vector<double> &weights) const;

  // gamma_K = ||E[u_K]|| / sum_{|S| < |K|} ||E[u_S]|| over accepted terms,
  // anchor included. Infinite (and flagged) on a zero denominator.
  double indicator(const AnovaTerm &term) const;

  // rho = ||E[u_K, previous order] - E[u_K]|| / ||sum_{|S| <= |K|} E[u_S]||
  // with the candidate term standing in for K in the denominator.
  double saturation(const AnovaTerm &candidate) const;

  // Store (or replace) a term; carries the previous mean for saturation.
  void accept_term(AnovaTerm term);
  // Remove a term and remember it as truncated.
  void drop_term(const std::vector<int> &K);
  // Restore semantics for the adaptive rollback: replace with the previous
  // snapshot of the term, or erase entirely if there was none.
  void restore_term(const std::vector<int> &K, const AnovaTerm *previous);

  // Signed combination coefficient of the accepted set: for states complete
  // up to the global level this equals kappa(M, |K|, level).
  std::int64_t combination_coefficient(const std::vector<int> &K) const;

  // E[u] and the standard deviation field from the signed combination of raw
  // term moments; negative variances are clamped at zero.
  MomentFields combine_moments() const;

  void set_index_set(int level, std::vector<std::vector<int>> sets);
  const std::map<int, std::vector<std::vector<int>>> &index_sets() const { return index_sets_; }

  void record_diagnostics(const std::vector<int> &K, int max_order, double mean_norm,
                          double gamma, double rho, const std::string &status);
  std::vector<TermDiagnostics> diagnostics_rows() const;

  bool was_dropped(const std::vector<int> &K) const { return dropped_.count(K) > 0; }

private:
  int dim_;
  double eps_anova_;
  int level_ = 0;
  std::map<std::vector<int>, AnovaTerm> terms_;
  std::map<std::vector<int>, int> dropped_;
  std::map<int, std::vector<std::vector<int>>> index_sets_;
  std::map<std::vector<int>, TermDiagnostics> diagnostics_;
};

void write_anova_terms_csv(const AnovaState &state, const std::string &path);

} // namespace rbc

#endif // RBC_ANOVA_HPP
