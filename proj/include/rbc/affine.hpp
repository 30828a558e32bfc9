// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_AFFINE_HPP
#define RBC_AFFINE_HPP

#include <array>
#include <string>
#include <utility>
#include <vector>
#include "rbc/fem.hpp"
#include "rbc/param.hpp"

namespace rbc
{

// Scalar coefficient of one affine term. A closed descriptor rather than a
// callback so runs can serialize and log the operator definition.
struct CoefficientFn
{
  enum class Kind
  {
    Constant,   // value
    LinearInXi, // value * xi_m
    SdDelta     // streamline-diffusion scalar delta_m(xi_m)
  };

  Kind kind = Kind::Constant;
  double value = 1.0; // constant c, or the scale of the linear term
  int direction = 0;  // 1-based parameter index for LinearInXi / SdDelta
  double nu = 0.0, speed = 0.0, mesh_h = 0.0; // SdDelta data
  bool frozen = false;   // evaluate SdDelta at a fixed coordinate instead
  double frozen_at = 0.0;

  double operator()(const Eigen::VectorXd &xi) const;
  std::string describe() const;

  static CoefficientFn constant(double c);
  static CoefficientFn linear_in_xi(int m, double scale);
  static CoefficientFn sd_delta(int m, double nu, double speed, double mesh_h);
};

// delta = (h / (2|w|)) (1 - 1/P) for element Peclet P = |w| h / (2 a) > 1,
// zero otherwise; a is the local diffusion coefficient.
double sd_delta_value(double a, double speed, double mesh_h);

// Full finite-element solution at one parameter point.
struct Snapshot
{
  Eigen::VectorXd xi;
  Vector interior;
  Vector full; // interior scattered plus the Dirichlet lifting
};

// Parameterized operator and forcing as affine expansions over the interior
// dofs: A_xi = sum_i phi_i(xi) A_i, f_xi = sum_j psi_j(xi) f_j. The forcing
// carries the base load plus the lifting contributions -A_i u_g.
class AffineSystem
{
public:
  AffineSystem(StructuredMesh mesh, DirichletLifting lifting, ParamBox box,
               std::vector<CoefficientFn> op_coeff, std::vector<SparseMatrix> op_mat,
               std::vector<CoefficientFn> rhs_coeff, std::vector<Vector> rhs_vec);

  int dim() const { return box_.dim(); }
  int num_interior() const { return lifting_.num_interior(); }
  int num_operator_terms() const { return static_cast<int>(op_mat_.size()); }
  int num_forcing_terms() const { return static_cast<int>(rhs_vec_.size()); }

  const StructuredMesh &mesh() const { return mesh_; }
  const DirichletLifting &lifting() const { return lifting_; }
  const ParamBox &box() const { return box_; }

  const SparseMatrix &operator_term(int i) const { return op_mat_[i]; }
  const Vector &forcing_term(int j) const { return rhs_vec_[j]; }
  const CoefficientFn &operator_coeff(int i) const { return op_coeff_[i]; }
  const CoefficientFn &forcing_coeff(int j) const { return rhs_coeff_[j]; }

  Eigen::VectorXd operator_coeff_values(const Eigen::VectorXd &xi) const;
  Eigen::VectorXd forcing_coeff_values(const Eigen::VectorXd &xi) const;

  // Exact linear combination of the stored terms; rejects xi outside the box.
  std::pair<SparseMatrix, Vector> assemble_at(const Eigen::VectorXd &xi) const;

  Snapshot full_solve(const Eigen::VectorXd &xi) const;

  Vector lift(const Vector &interior_values) const { return lifting_.prolongate(interior_values); }

private:
  StructuredMesh mesh_;
  DirichletLifting lifting_;
  ParamBox box_;
  std::vector<CoefficientFn> op_coeff_;
  std::vector<SparseMatrix> op_mat_;
  std::vector<CoefficientFn> rhs_coeff_;
  std::vector<Vector> rhs_vec_;
};

// Benchmark operator: per-subdomain diffusion nu*xi_m, one convection term,
// per-subdomain streamline-diffusion blocks with the delta scalar factored
// into the coefficient. freeze_sd evaluates delta at the anchor coordinate.
AffineSystem build_benchmark(const StructuredMesh &mesh, double nu,
                             const std::array<double, 2> &w, const ParamBox &box,
                             bool freeze_sd = false);

// Amortizes the symbolic factorization over solves at many parameters.
class FullSolver
{
public:
  explicit FullSolver(const AffineSystem &system) : system_(system) {}

  Snapshot solve(const Eigen::VectorXd &xi);

private:
  const AffineSystem &system_;
  SparseSolver solver_;
};

} // namespace rbc

#endif // RBC_AFFINE_HPP
