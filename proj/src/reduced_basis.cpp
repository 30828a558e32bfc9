// SPDX-License-Identifier: Apache-2.0

#include "rbc/reduced_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace rbc
{

namespace
{

constexpr int kGrowthChunk = 32;
constexpr double kDegenerateRatio = 1e-10;

std::vector<int> row_support_of(const SparseMatrix &A)
{
  std::vector<int> rows;
  for (int r = 0; r < A.outerSize(); r++)
  {
    if (A.outerIndexPtr()[r + 1] > A.outerIndexPtr()[r])
    {
      rows.push_back(r);
    }
  }
  return rows;
}

std::vector<int> intersect_sorted(const std::vector<int> &a, const std::vector<int> &b)
{
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Union of the column indices of A over the given rows.
std::vector<int> columns_over_rows(const SparseMatrix &A, const std::vector<int> &rows)
{
  std::vector<char> seen(A.cols(), 0);
  for (int r : rows)
  {
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      seen[it.col()] = 1;
    }
  }
  std::vector<int> cols;
  for (int c = 0; c < A.cols(); c++)
  {
    if (seen[c])
    {
      cols.push_back(c);
    }
  }
  return cols;
}

// w = A q restricted to the rows of the support list, extended precision.
void matvec_rows(const SparseMatrix &A, const std::vector<int> &rows, const double *q,
                 ResidVector &w)
{
  for (int r : rows)
  {
    ResidScalar acc = 0;
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      acc += static_cast<ResidScalar>(it.value()) * q[it.col()];
    }
    w[r] = acc;
  }
}

// z += A^T w over the given rows; touched entries lie in the column support.
void add_transpose_rows(const SparseMatrix &A, const std::vector<int> &rows,
                        const ResidVector &w, ResidVector &z)
{
  for (int r : rows)
  {
    const ResidScalar wr = w[r];
    if (wr == 0)
    {
      continue;
    }
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      z[it.col()] += static_cast<ResidScalar>(it.value()) * wr;
    }
  }
}

ResidScalar dot_over(const std::vector<int> &idx, const ResidVector &z, const double *v)
{
  ResidScalar acc = 0;
  for (int c : idx)
  {
    acc += z[c] * v[c];
  }
  return acc;
}

ResidScalar dot_rows(const std::vector<int> &rows, const ResidVector &a, const ResidVector &b)
{
  ResidScalar acc = 0;
  for (int r : rows)
  {
    acc += a[r] * b[r];
  }
  return acc;
}

} // namespace

double IndicatorConfig::point_weight() const
{
  if (alpha < 0.0 || alpha > 1.0)
  {
    throw std::invalid_argument("IndicatorConfig: alpha must lie in [0,1]");
  }
  return alpha == 0.0 ? 1.0 : std::pow(density, alpha);
}

ReducedBasis::ReducedBasis(const AffineSystem &system) : system_(&system)
{
  const int n_int = system.num_interior();
  const int n_a = system.num_operator_terms();
  const int n_f = system.num_forcing_terms();

  Q_.resize(n_int, 0);
  red_op_.assign(n_a, Eigen::MatrixXd());
  red_rhs_.assign(n_f, Eigen::VectorXd());

  row_support_.resize(n_a);
  col_support_.resize(n_a);
  for (int i = 0; i < n_a; i++)
  {
    row_support_[i] = row_support_of(system.operator_term(i));
    col_support_[i] = columns_over_rows(system.operator_term(i), row_support_[i]);
  }

  // Keep only pairs whose row supports intersect; disjoint pairs contribute a
  // structurally zero Gram block.
  for (int i = 0; i < n_a; i++)
  {
    for (int j = i; j < n_a; j++)
    {
      auto rows = intersect_sorted(row_support_[i], row_support_[j]);
      if (rows.empty())
      {
        continue;
      }
      GramBlock block;
      block.i = i;
      block.j = j;
      block.cols_i = columns_over_rows(system.operator_term(i), rows);
      block.cols_j = (i == j) ? block.cols_i : columns_over_rows(system.operator_term(j), rows);
      block.rows = std::move(rows);
      gram_.push_back(std::move(block));
    }
  }

  cross_.assign(static_cast<std::size_t>(n_a) * n_f, ResidVector());

  rhs_gram_.resize(n_f, n_f);
  for (int i = 0; i < n_f; i++)
  {
    for (int j = i; j < n_f; j++)
    {
      ResidScalar acc = 0;
      const Vector &fi = system.forcing_term(i);
      const Vector &fj = system.forcing_term(j);
      for (int k = 0; k < n_int; k++)
      {
        acc += static_cast<ResidScalar>(fi[k]) * fj[k];
      }
      rhs_gram_(i, j) = acc;
      rhs_gram_(j, i) = acc;
    }
  }
}

void ReducedBasis::ensure_capacity(int cols)
{
  if (Q_.cols() >= cols)
  {
    return;
  }
  const int cap = ((cols + kGrowthChunk - 1) / kGrowthChunk) * kGrowthChunk;
  Q_.conservativeResize(Eigen::NoChange, cap);
  for (auto &m : red_op_)
  {
    m.conservativeResize(cap, cap);
  }
  for (auto &v : red_rhs_)
  {
    v.conservativeResize(cap);
  }
  for (auto &b : gram_)
  {
    b.G.conservativeResize(cap, cap);
  }
  for (auto &v : cross_)
  {
    v.conservativeResize(cap);
  }
}

void ReducedBasis::rollback(const Mark &mark)
{
  if (mark.cols > n_)
  {
    throw std::logic_error("ReducedBasis::rollback: mark is ahead of the basis");
  }
  n_ = mark.cols;
  ledger_.resize(n_);
  presentation_.erase(std::remove_if(presentation_.begin(), presentation_.end(),
                                     [&](int c) { return c >= n_; }),
                      presentation_.end());
}

bool ReducedBasis::append_snapshot(const Snapshot &snapshot, const std::string &label)
{
  const double norm_in = snapshot.interior.norm();
  if (!(norm_in > 0.0))
  {
    degenerate_rejections_++;
    return false;
  }

  // Modified Gram-Schmidt with one re-orthogonalization pass.
  Eigen::VectorXd v = snapshot.interior;
  for (int pass = 0; pass < 2; pass++)
  {
    for (int a = 0; a < n_; a++)
    {
      v -= (Q_.col(a).dot(v)) * Q_.col(a);
    }
  }
  const double norm_out = v.norm();
  if (norm_out / norm_in < kDegenerateRatio)
  {
    degenerate_rejections_++;
    return false;
  }

  ensure_capacity(n_ + 1);
  Q_.col(n_) = v / norm_out;
  update_offline_blocks(Q_.col(n_));
  ledger_.push_back({snapshot.xi, label});
  n_++;
  return true;
}

void ReducedBasis::update_offline_blocks(const Eigen::VectorXd &q)
{
  const AffineSystem &sys = *system_;
  const int n_int = sys.num_interior();
  const int n_a = sys.num_operator_terms();
  const int n_f = sys.num_forcing_terms();
  const int r = n_; // index of the new column

  // Products with the new column, extended precision, kept for all terms.
  ResidVector q_ext(n_int);
  for (int k = 0; k < n_int; k++)
  {
    q_ext[k] = q[k];
  }
  std::vector<ResidVector> w(n_a, ResidVector::Zero(n_int));
  std::vector<ResidVector> v(n_a, ResidVector::Zero(n_int));
  for (int i = 0; i < n_a; i++)
  {
    matvec_rows(sys.operator_term(i), row_support_[i], q.data(), w[i]);
    add_transpose_rows(sys.operator_term(i), row_support_[i], q_ext, v[i]);
  }

  // Reduced operators: new column Q^T (A_i q), new row (A_i^T q)^T Q.
  for (int i = 0; i < n_a; i++)
  {
    for (int a = 0; a < r; a++)
    {
      red_op_[i](a, r) = static_cast<double>(dot_over(row_support_[i], w[i], Q_.col(a).data()));
      red_op_[i](r, a) = static_cast<double>(dot_over(col_support_[i], v[i], Q_.col(a).data()));
    }
    red_op_[i](r, r) = static_cast<double>(dot_over(row_support_[i], w[i], q.data()));
  }

  for (int j = 0; j < n_f; j++)
  {
    ResidScalar acc = 0;
    const Vector &fj = sys.forcing_term(j);
    for (int k = 0; k < n_int; k++)
    {
      acc += static_cast<ResidScalar>(q[k]) * fj[k];
    }
    red_rhs_[j](r) = static_cast<double>(acc);
  }

  // Cross terms Q^T A_i^T f_j: new entry (A_i q) . f_j.
  for (int i = 0; i < n_a; i++)
  {
    for (int j = 0; j < n_f; j++)
    {
      ResidScalar acc = 0;
      const Vector &fj = sys.forcing_term(j);
      for (int k : row_support_[i])
      {
        acc += w[i][k] * static_cast<ResidScalar>(fj[k]);
      }
      cross_[static_cast<std::size_t>(i) * n_f + j](r) = acc;
    }
  }

  // Gram blocks: column (A_i q_a) . (A_j q), row (A_i q) . (A_j q_b).
  ResidVector z = ResidVector::Zero(n_int);
  for (auto &block : gram_)
  {
    // z1 = A_i^T w_j over the shared rows.
    add_transpose_rows(sys.operator_term(block.i), block.rows, w[block.j], z);
    for (int a = 0; a < r; a++)
    {
      block.G(a, r) = dot_over(block.cols_i, z, Q_.col(a).data());
    }
    block.G(r, r) = dot_rows(block.rows, w[block.i], w[block.j]);
    for (int c : block.cols_i)
    {
      z[c] = 0;
    }

    if (block.i != block.j)
    {
      add_transpose_rows(sys.operator_term(block.j), block.rows, w[block.i], z);
      for (int a = 0; a < r; a++)
      {
        block.G(r, a) = dot_over(block.cols_j, z, Q_.col(a).data());
      }
      for (int c : block.cols_j)
      {
        z[c] = 0;
      }
    }
    else
    {
      for (int a = 0; a < r; a++)
      {
        block.G(r, a) = block.G(a, r);
      }
    }
  }
}

Eigen::MatrixXd ReducedBasis::reduced_operator_at(const Eigen::VectorXd &xi) const
{
  const Eigen::VectorXd phi = system_->operator_coeff_values(xi);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n_, n_);
  for (int i = 0; i < system_->num_operator_terms(); i++)
  {
    if (phi[i] != 0.0)
    {
      A += phi[i] * red_op_[i].topLeftCorner(n_, n_);
    }
  }
  return A;
}

Eigen::VectorXd ReducedBasis::reduced_forcing_at(const Eigen::VectorXd &xi) const
{
  const Eigen::VectorXd psi = system_->forcing_coeff_values(xi);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n_);
  for (int j = 0; j < system_->num_forcing_terms(); j++)
  {
    if (psi[j] != 0.0)
    {
      f += psi[j] * red_rhs_[j].head(n_);
    }
  }
  return f;
}

Eigen::VectorXd ReducedBasis::reduced_solve(const Eigen::VectorXd &xi) const
{
  if (n_ == 0)
  {
    throw std::logic_error("reduced_solve: basis is empty");
  }
  const Eigen::MatrixXd A = reduced_operator_at(xi);
  const Eigen::VectorXd f = reduced_forcing_at(xi);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
  last_rcond_ = lu.rcond();
  Eigen::VectorXd x = lu.solve(f);
  if (!x.allFinite() || last_rcond_ == 0.0)
  {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "reduced_solve: singular reduced matrix (rcond = %.3e)",
                  last_rcond_);
    throw SolverError(buf);
  }
  if (last_rcond_ < 1e-12)
  {
    std::cerr << "[rbc] warning: reduced system rcond = " << last_rcond_ << "\n";
  }

  // One step of iterative refinement with an extended-precision residual;
  // the indicator of an in-span solution is limited by the forward error of
  // this solve, not by the block expansion.
  Eigen::VectorXd r(n_);
  for (int a = 0; a < n_; a++)
  {
    ResidScalar acc = f[a];
    for (int b = 0; b < n_; b++)
    {
      acc -= static_cast<ResidScalar>(A(a, b)) * x[b];
    }
    r[a] = static_cast<double>(acc);
  }
  const Eigen::VectorXd dx = lu.solve(r);
  if (dx.allFinite())
  {
    x += dx;
  }
  return x;
}

double ReducedBasis::residual_indicator(const Eigen::VectorXd &xi,
                                        const Eigen::VectorXd &coeffs,
                                        const IndicatorConfig &config,
                                        bool *absolute_flagged) const
{
  const Eigen::VectorXd phi = system_->operator_coeff_values(xi);
  const Eigen::VectorXd psi = system_->forcing_coeff_values(xi);
  const int n_f = system_->num_forcing_terms();

  ResidVector u(n_);
  for (int a = 0; a < n_; a++)
  {
    u[a] = coeffs[a];
  }

  // u^T G u over the stored pairs; transposed pairs fold into a factor 2.
  ResidScalar quad = 0;
  for (const auto &block : gram_)
  {
    const double c = phi[block.i] * phi[block.j];
    if (c == 0.0)
    {
      continue;
    }
    ResidScalar form = 0;
    for (int b = 0; b < n_; b++)
    {
      ResidScalar col = 0;
      for (int a = 0; a < n_; a++)
      {
        col += block.G(a, b) * u[a];
      }
      form += col * u[b];
    }
    quad += (block.i == block.j ? c : 2.0 * c) * form;
  }

  // u^T g with g = sum phi_i psi_j Q^T A_i^T f_j.
  ResidScalar lin = 0;
  for (int i = 0; i < system_->num_operator_terms(); i++)
  {
    if (phi[i] == 0.0)
    {
      continue;
    }
    for (int j = 0; j < n_f; j++)
    {
      if (psi[j] == 0.0)
      {
        continue;
      }
      const ResidVector &g = cross_[static_cast<std::size_t>(i) * n_f + j];
      ResidScalar dot = 0;
      for (int a = 0; a < n_; a++)
      {
        dot += g[a] * u[a];
      }
      lin += static_cast<ResidScalar>(phi[i]) * psi[j] * dot;
    }
  }

  // h = ||f_xi||^2 through the forcing Gram.
  ResidScalar h = 0;
  for (int i = 0; i < n_f; i++)
  {
    if (psi[i] == 0.0)
    {
      continue;
    }
    for (int j = 0; j < n_f; j++)
    {
      h += static_cast<ResidScalar>(psi[i]) * psi[j] * rhs_gram_(i, j);
    }
  }

  ResidScalar r2 = quad - 2 * lin + h;
  if (r2 < 0)
  {
    r2 = 0;
  }
  if (absolute_flagged != nullptr)
  {
    *absolute_flagged = !(h > 0);
  }
  const double eta = h > 0 ? static_cast<double>(std::sqrt(r2 / h))
                           : static_cast<double>(std::sqrt(r2));
  return eta * config.point_weight();
}

Vector ReducedBasis::lift_reduced(const Eigen::VectorXd &coeffs) const
{
  return system_->lift(Q_.leftCols(n_) * coeffs);
}

void ReducedBasis::append_presentation(const std::vector<int> &columns)
{
  presentation_.insert(presentation_.end(), columns.begin(), columns.end());
}

std::vector<int> ReducedBasis::presentation_order() const
{
  if (static_cast<int>(presentation_.size()) == n_)
  {
    return presentation_;
  }
  std::vector<int> order(n_);
  for (int c = 0; c < n_; c++)
  {
    order[c] = c;
  }
  return order;
}

double ReducedBasis::orthonormality_defect() const
{
  if (n_ == 0)
  {
    return 0.0;
  }
  const Eigen::MatrixXd gram = Q_.leftCols(n_).transpose() * Q_.leftCols(n_);
  return (gram - Eigen::MatrixXd::Identity(n_, n_)).cwiseAbs().maxCoeff();
}

void ReducedBasis::save_snapshots(const std::string &binary_path,
                                  const std::string &params_csv) const
{
  const auto order = presentation_order();

  std::ofstream bin(binary_path, std::ios::binary);
  if (!bin)
  {
    throw std::runtime_error("cannot open " + binary_path + " for writing");
  }
  const char magic[8] = {'R', 'B', 'S', 'N', 'A', 'P', '0', '1'};
  const std::int32_t rows = num_interior(), cols = n_;
  bin.write(magic, sizeof(magic));
  bin.write(reinterpret_cast<const char *>(&rows), sizeof(rows));
  bin.write(reinterpret_cast<const char *>(&cols), sizeof(cols));
  for (int c : order)
  {
    bin.write(reinterpret_cast<const char *>(Q_.col(c).data()),
              static_cast<std::streamsize>(sizeof(double)) * rows);
  }

  std::ofstream csv(params_csv);
  if (!csv)
  {
    throw std::runtime_error("cannot open " + params_csv + " for writing");
  }
  csv << "column,label";
  const int dim = system_->dim();
  for (int m = 1; m <= dim; m++)
  {
    csv << ",xi" << m;
  }
  csv << "\n";
  char buf[48];
  for (std::size_t k = 0; k < order.size(); k++)
  {
    const auto &rec = ledger_[order[k]];
    csv << k << "," << rec.label;
    for (int m = 0; m < dim; m++)
    {
      std::snprintf(buf, sizeof(buf), ",%.16e", rec.xi[m]);
      csv << buf;
    }
    csv << "\n";
  }
}

SweepResult rbm_update(ReducedBasis &basis, const PointSet &points, double eps_rb,
                       const IndicatorConfig &config)
{
  if (points.size() == 0)
  {
    throw std::invalid_argument("rbm_update: point set is empty");
  }

  SweepResult result;
  result.fields.reserve(points.size());
  result.eta.reserve(points.size());
  FullSolver full(basis.system());

  for (int k = 0; k < points.size(); k++)
  {
    const Eigen::VectorXd &xi = points.points[k];
    double eta = std::numeric_limits<double>::infinity();
    Eigen::VectorXd coeffs;
    if (basis.size() > 0)
    {
      coeffs = basis.reduced_solve(xi);
      eta = basis.residual_indicator(xi, coeffs, config);
    }
    result.eta.push_back(eta);

    if (eta < eps_rb)
    {
      result.fields.push_back(basis.lift_reduced(coeffs));
      continue;
    }

    const Snapshot snap = full.solve(xi);
    result.full_solves++;
    result.fields.push_back(snap.full);
    const int col = basis.size();
    if (basis.append_snapshot(snap, points.labels[k]))
    {
      result.new_columns.push_back(col);
    }
    else
    {
      result.degenerate_rejections++;
    }
  }
  return result;
}

std::vector<int> sort_by_indicator(const std::vector<double> &gammas)
{
  std::vector<int> remaining(gammas.size());
  for (std::size_t k = 0; k < gammas.size(); k++)
  {
    remaining[k] = static_cast<int>(k);
  }
  std::vector<int> order;
  order.reserve(gammas.size());
  while (!remaining.empty())
  {
    std::size_t best = 0;
    for (std::size_t k = 1; k < remaining.size(); k++)
    {
      if (gammas[remaining[k]] > gammas[remaining[best]])
      {
        best = k;
      }
    }
    order.push_back(remaining[best]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return order;
}

} // namespace rbc
