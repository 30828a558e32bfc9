// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_REDUCED_BASIS_HPP
#define RBC_REDUCED_BASIS_HPP

#include <string>
#include <vector>
#include <Eigen/Dense>
#include "rbc/affine.hpp"
#include "rbc/pointset.hpp"

namespace rbc
{

// Scalar for the expanded residual norm. The offline expansion cancels the
// large |A Q u| and |f| contributions against each other, so the blocks are
// held and contracted in extended precision to keep the round-off floor of
// the indicator below the tightest acceptance tolerances.
using ResidScalar = long double;
using ResidMatrix = Eigen::Matrix<ResidScalar, Eigen::Dynamic, Eigen::Dynamic>;
using ResidVector = Eigen::Matrix<ResidScalar, Eigen::Dynamic, 1>;

struct IndicatorConfig
{
  double alpha = 0.0;   // exponent of the density weight, in [0,1]
  double density = 1.0; // joint density value on Gamma (constant for uniform)

  double point_weight() const;
};

struct SnapshotRecord
{
  Eigen::VectorXd xi;
  std::string label;
};

// Orthonormal reduced basis with the offline blocks needed for parameter-
// independent online work: reduced operators Q^T A_i Q, reduced forcings
// Q^T f_j, residual Gram blocks Q^T A_i^T A_j Q (support-disjoint pairs are
// skipped), cross terms Q^T A_i^T f_j, and the forcing Gram f_i^T f_j.
class ReducedBasis
{
public:
  explicit ReducedBasis(const AffineSystem &system);

  const AffineSystem &system() const { return *system_; }
  int size() const { return n_; }
  int num_interior() const { return static_cast<int>(Q_.rows()); }

  struct Mark
  {
    int cols = 0;
  };
  Mark mark() const { return {n_}; }
  // Truncate back to a previous state; retained columns and blocks are
  // untouched by later growth so the restore is exact.
  void rollback(const Mark &mark);

  // Galerkin solve on the reduced space; cost independent of the fine grid.
  Eigen::VectorXd reduced_solve(const Eigen::VectorXd &xi) const;

  // Residual indicator eta = ||A_xi Q u - f_xi|| / ||f_xi|| * w_k evaluated
  // through the offline blocks; negative round-off is clamped before the
  // square root. A zero forcing norm switches to the absolute residual and
  // sets the flag.
  double residual_indicator(const Eigen::VectorXd &xi, const Eigen::VectorXd &coeffs,
                            const IndicatorConfig &config,
                            bool *absolute_flagged = nullptr) const;

  // Orthogonalize and append one snapshot; returns false (and leaves the
  // basis unchanged) when the orthogonal complement is degenerate.
  bool append_snapshot(const Snapshot &snapshot, const std::string &label);

  // Full nodal field of a reduced solution (lifting re-added).
  Vector lift_reduced(const Eigen::VectorXd &coeffs) const;

  const std::vector<SnapshotRecord> &ledger() const { return ledger_; }
  double last_rcond() const { return last_rcond_; }
  int degenerate_rejections() const { return degenerate_rejections_; }

  // Presentation order of the snapshot ledger maintained by the indicator
  // sort; the basis columns themselves are never permuted.
  void append_presentation(const std::vector<int> &columns);
  std::vector<int> presentation_order() const;

  double orthonormality_defect() const; // max |Q^T Q - I|

  // Reduced operator assembled from the offline blocks (test support).
  Eigen::MatrixXd reduced_operator_at(const Eigen::VectorXd &xi) const;
  Eigen::VectorXd reduced_forcing_at(const Eigen::VectorXd &xi) const;
  Eigen::MatrixXd basis_matrix() const { return Q_.leftCols(n_); }

  void save_snapshots(const std::string &binary_path, const std::string &params_csv) const;

private:
  void ensure_capacity(int cols);
  void update_offline_blocks(const Eigen::VectorXd &q);

  const AffineSystem *system_;
  int n_ = 0;
  Eigen::MatrixXd Q_;
  std::vector<SnapshotRecord> ledger_;
  std::vector<int> presentation_;

  std::vector<Eigen::MatrixXd> red_op_;  // per operator term
  std::vector<Eigen::VectorXd> red_rhs_; // per forcing term

  struct GramBlock
  {
    int i, j;                // term pair, i <= j
    std::vector<int> rows;   // overlap of the row supports
    std::vector<int> cols_i; // column support of A_i over the shared rows
    std::vector<int> cols_j;
    ResidMatrix G;
  };
  std::vector<GramBlock> gram_;
  std::vector<ResidVector> cross_; // [i * n_f + j] = Q^T A_i^T f_j
  ResidMatrix rhs_gram_;           // f_i^T f_j

  std::vector<std::vector<int>> row_support_; // per operator term
  std::vector<std::vector<int>> col_support_;

  mutable double last_rcond_ = 1.0;
  int degenerate_rejections_ = 0;
};

struct SweepResult
{
  std::vector<Vector> fields;  // per-point full nodal solution used downstream
  std::vector<double> eta;     // indicator before any snapshot was added
  std::vector<int> new_columns; // basis columns appended during the sweep
  int full_solves = 0;
  int degenerate_rejections = 0;
};

// One reduced-basis sweep over the point set in its stored order: accept the
// reduced solution when the indicator passes, otherwise take a full solve and
// augment the basis.
SweepResult rbm_update(ReducedBasis &basis, const PointSet &points, double eps_rb,
                       const IndicatorConfig &config);

// Stable selection-by-maximum: the order in which the indices 0..k-1 are
// picked, first maximum winning ties.
std::vector<int> sort_by_indicator(const std::vector<double> &gammas);

} // namespace rbc

#endif // RBC_REDUCED_BASIS_HPP
