// SPDX-License-Identifier: Apache-2.0

#include "rbc/affine.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace rbc
{

double sd_delta_value(double a, double speed, double mesh_h)
{
  const double peclet = speed * mesh_h / (2.0 * a);
  if (peclet <= 1.0)
  {
    return 0.0;
  }
  return mesh_h / (2.0 * speed) * (1.0 - 1.0 / peclet);
}

double CoefficientFn::operator()(const Eigen::VectorXd &xi) const
{
  switch (kind)
  {
    case Kind::Constant:
      return value;
    case Kind::LinearInXi:
      return value * xi[direction - 1];
    case Kind::SdDelta:
    {
      const double coord = frozen ? frozen_at : xi[direction - 1];
      return sd_delta_value(nu * coord, speed, mesh_h);
    }
  }
  return 0.0;
}

std::string CoefficientFn::describe() const
{
  std::ostringstream os;
  switch (kind)
  {
    case Kind::Constant:
      os << "constant(" << value << ")";
      break;
    case Kind::LinearInXi:
      os << "linear_in_xi(m=" << direction << ", scale=" << value << ")";
      break;
    case Kind::SdDelta:
      os << "sd_delta(m=" << direction << ", nu=" << nu << ", speed=" << speed
         << ", h=" << mesh_h;
      if (frozen)
      {
        os << ", frozen_at=" << frozen_at;
      }
      os << ")";
      break;
  }
  return os.str();
}

CoefficientFn CoefficientFn::constant(double c)
{
  CoefficientFn fn;
  fn.kind = Kind::Constant;
  fn.value = c;
  return fn;
}

CoefficientFn CoefficientFn::linear_in_xi(int m, double scale)
{
  CoefficientFn fn;
  fn.kind = Kind::LinearInXi;
  fn.direction = m;
  fn.value = scale;
  return fn;
}

CoefficientFn CoefficientFn::sd_delta(int m, double nu, double speed, double mesh_h)
{
  CoefficientFn fn;
  fn.kind = Kind::SdDelta;
  fn.direction = m;
  fn.nu = nu;
  fn.speed = speed;
  fn.mesh_h = mesh_h;
  return fn;
}

namespace
{

// Restrict a full-grid matrix to the interior-interior block.
SparseMatrix restrict_matrix(const SparseMatrix &A, const DirichletLifting &lift)
{
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(A.nonZeros());
  for (int r = 0; r < A.outerSize(); r++)
  {
    const int ri = lift.full_to_interior[r];
    if (ri < 0)
    {
      continue;
    }
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      const int ci = lift.full_to_interior[it.col()];
      if (ci >= 0)
      {
        trips.emplace_back(ri, ci, it.value());
      }
    }
  }
  SparseMatrix B(lift.num_interior(), lift.num_interior());
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  return B;
}

Vector lifting_forcing(const SparseMatrix &A_full, const DirichletLifting &lift)
{
  const Vector w = A_full * lift.u_g;
  return -lift.restrict_interior(w);
}

} // namespace

AffineSystem::AffineSystem(StructuredMesh mesh, DirichletLifting lifting, ParamBox box,
                           std::vector<CoefficientFn> op_coeff,
                           std::vector<SparseMatrix> op_mat,
                           std::vector<CoefficientFn> rhs_coeff, std::vector<Vector> rhs_vec)
  : mesh_(std::move(mesh)), lifting_(std::move(lifting)), box_(std::move(box)),
    op_coeff_(std::move(op_coeff)), op_mat_(std::move(op_mat)),
    rhs_coeff_(std::move(rhs_coeff)), rhs_vec_(std::move(rhs_vec))
{
  const int n_int = lifting_.num_interior();
  for (const auto &A : op_mat_)
  {
    if (A.rows() != n_int || A.cols() != n_int)
    {
      throw std::invalid_argument("AffineSystem: operator term dimension mismatch");
    }
  }
  for (const auto &f : rhs_vec_)
  {
    if (f.size() != n_int)
    {
      throw std::invalid_argument("AffineSystem: forcing term dimension mismatch");
    }
  }
}

Eigen::VectorXd AffineSystem::operator_coeff_values(const Eigen::VectorXd &xi) const
{
  Eigen::VectorXd phi(num_operator_terms());
  for (int i = 0; i < num_operator_terms(); i++)
  {
    phi[i] = op_coeff_[i](xi);
  }
  return phi;
}

Eigen::VectorXd AffineSystem::forcing_coeff_values(const Eigen::VectorXd &xi) const
{
  Eigen::VectorXd psi(num_forcing_terms());
  for (int j = 0; j < num_forcing_terms(); j++)
  {
    psi[j] = rhs_coeff_[j](xi);
  }
  return psi;
}

std::pair<SparseMatrix, Vector> AffineSystem::assemble_at(const Eigen::VectorXd &xi) const
{
  if (!box_.contains(xi))
  {
    std::ostringstream os;
    os << "assemble_at: parameter outside Gamma: [";
    for (Eigen::Index m = 0; m < xi.size(); m++)
    {
      os << xi[m] << (m + 1 < xi.size() ? ", " : "]");
    }
    throw std::invalid_argument(os.str());
  }

  const Eigen::VectorXd phi = operator_coeff_values(xi);
  SparseMatrix A = phi[0] * op_mat_[0];
  for (int i = 1; i < num_operator_terms(); i++)
  {
    A += phi[i] * op_mat_[i];
  }
  A.makeCompressed();

  const Eigen::VectorXd psi = forcing_coeff_values(xi);
  Vector f = psi[0] * rhs_vec_[0];
  for (int j = 1; j < num_forcing_terms(); j++)
  {
    f += psi[j] * rhs_vec_[j];
  }
  return {std::move(A), std::move(f)};
}

Snapshot AffineSystem::full_solve(const Eigen::VectorXd &xi) const
{
  FullSolver solver(*this);
  return solver.solve(xi);
}

Snapshot FullSolver::solve(const Eigen::VectorXd &xi)
{
  auto [A, f] = system_.assemble_at(xi);
  try
  {
    solver_.factorize(A);
    Snapshot snap;
    snap.xi = xi;
    snap.interior = solver_.solve(f);
    snap.full = system_.lift(snap.interior);
    return snap;
  }
  catch (const SolverError &err)
  {
    std::ostringstream os;
    os << err.what() << " at xi = [";
    for (Eigen::Index m = 0; m < xi.size(); m++)
    {
      os << xi[m] << (m + 1 < xi.size() ? ", " : "]");
    }
    throw SolverError(os.str());
  }
}

AffineSystem build_benchmark(const StructuredMesh &mesh, double nu,
                             const std::array<double, 2> &w, const ParamBox &box,
                             bool freeze_sd)
{
  if (mesh.num_subdomains() != box.dim())
  {
    throw std::invalid_argument("build_benchmark: subdomain count must equal parameter dimension");
  }
  const int M = box.dim();
  const double speed = std::hypot(w[0], w[1]);
  const DirichletLifting lift = build_benchmark_lifting(mesh);
  const Eigen::VectorXd anchor = box.anchor();

  const auto diffusion = assemble_diffusion_blocks(mesh);
  const auto convection = assemble_convection(mesh, w);
  const auto sd = assemble_sd_blocks(mesh, w);

  std::vector<CoefficientFn> op_coeff;
  std::vector<SparseMatrix> op_full;
  op_coeff.reserve(2 * M + 1);
  op_full.reserve(2 * M + 1);
  for (int m = 0; m < M; m++)
  {
    op_coeff.push_back(CoefficientFn::linear_in_xi(m + 1, nu));
    op_full.push_back(diffusion[m]);
  }
  op_coeff.push_back(CoefficientFn::constant(1.0));
  op_full.push_back(convection);
  for (int m = 0; m < M; m++)
  {
    auto fn = CoefficientFn::sd_delta(m + 1, nu, speed, mesh.h());
    if (freeze_sd)
    {
      fn.frozen = true;
      fn.frozen_at = anchor[m];
    }
    op_coeff.push_back(fn);
    op_full.push_back(sd[m]);
  }

  std::vector<CoefficientFn> rhs_coeff;
  std::vector<Vector> rhs_vec;
  rhs_coeff.reserve(op_coeff.size() + 1);
  rhs_vec.reserve(op_coeff.size() + 1);
  rhs_coeff.push_back(CoefficientFn::constant(1.0));
  rhs_vec.push_back(lift.restrict_interior(assemble_load(mesh, 1.0)));
  for (std::size_t i = 0; i < op_full.size(); i++)
  {
    rhs_coeff.push_back(op_coeff[i]);
    rhs_vec.push_back(lifting_forcing(op_full[i], lift));
  }

  std::vector<SparseMatrix> op_mat;
  op_mat.reserve(op_full.size());
  for (const auto &A : op_full)
  {
    op_mat.push_back(restrict_matrix(A, lift));
  }

  return AffineSystem(mesh, lift, box, std::move(op_coeff), std::move(op_mat),
                      std::move(rhs_coeff), std::move(rhs_vec));
}

} // namespace rbc
