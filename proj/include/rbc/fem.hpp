// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_FEM_HPP
#define RBC_FEM_HPP

#include <array>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include "rbc/mesh.hpp"

namespace rbc
{

using Vector = Eigen::VectorXd;
// Row-compressed storage: row offsets, strictly increasing column ids, values.
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SolverError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Nodal interpolant of the boundary data, zero at interior nodes, plus the
// interior-dof index maps used to reduce the full system.
struct DirichletLifting
{
  Vector u_g;                  // full nodal vector, nonzero only on the boundary
  std::vector<int> interior;   // interior node ids in ascending order
  std::vector<int> full_to_interior; // -1 for boundary nodes

  int num_interior() const { return static_cast<int>(interior.size()); }

  Vector restrict_interior(const Vector &full) const;
  // Scatter an interior vector into a full nodal field and add u_g.
  Vector prolongate(const Vector &interior_values) const;
};

// Boundary data of the benchmark: 1 on {x1 = -1} and on {-1 <= x1 <= 0,
// x2 = -1} (both corners included), 0 elsewhere on the boundary.
DirichletLifting build_benchmark_lifting(const StructuredMesh &mesh);

// Per-subdomain stiffness blocks: K_m = sum over elements of subdomain m of
// (grad phi_a, grad phi_b), bilinear Q1 basis, 2x2 Gauss points. The sum over
// m is the global unit-coefficient stiffness matrix.
std::vector<SparseMatrix> assemble_diffusion_blocks(const StructuredMesh &mesh);

// Galerkin convection matrix (w . grad u, v).
SparseMatrix assemble_convection(const StructuredMesh &mesh, const std::array<double, 2> &w);

// Per-subdomain streamline-diffusion blocks S_m = sum over elements of
// subdomain m of (w . grad phi_a, w . grad phi_b). The stabilization scalar
// is applied later, per parameter.
std::vector<SparseMatrix> assemble_sd_blocks(const StructuredMesh &mesh,
                                             const std::array<double, 2> &w);

// Consistent load vector for a constant forcing; entries sum to 4*f_const.
Vector assemble_load(const StructuredMesh &mesh, double f_const);

// Direct sparse solve with a residual check (relative residual <= 1e-10).
Vector solve_sparse(const SparseMatrix &A, const Vector &b);

// Reusable factorization: the analyze/factorize split amortizes the symbolic
// phase over solves with a fixed sparsity pattern.
class SparseSolver
{
public:
  void factorize(const SparseMatrix &A);
  Vector solve(const Vector &b) const;

private:
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
  Eigen::SparseMatrix<double> A_;
  bool analyzed_ = false;
};

// Matrix Market coordinate text dump (1-based indices) for cross-checking.
void write_matrix_market(const SparseMatrix &A, const std::string &path);

} // namespace rbc

#endif // RBC_FEM_HPP
