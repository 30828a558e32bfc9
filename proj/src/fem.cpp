// SPDX-License-Identifier: Apache-2.0

#include "rbc/fem.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace rbc
{

namespace
{

// 2x2 Gauss points and weights on the reference square [-1,1]^2.
constexpr double kGaussPt = 0.57735026918962576; // 1/sqrt(3)
const std::array<std::array<double, 2>, 4> kQuadPts = {
    {{-kGaussPt, -kGaussPt}, {kGaussPt, -kGaussPt}, {kGaussPt, kGaussPt}, {-kGaussPt, kGaussPt}}};
constexpr double kQuadWt = 1.0;

// Q1 reference corners, counterclockwise from bottom-left.
const std::array<std::array<double, 2>, 4> kCorners = {{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};

double shape(int a, double s, double t)
{
  return 0.25 * (1.0 + kCorners[a][0] * s) * (1.0 + kCorners[a][1] * t);
}

std::array<double, 2> shape_grad_ref(int a, double s, double t)
{
  return {0.25 * kCorners[a][0] * (1.0 + kCorners[a][1] * t),
          0.25 * kCorners[a][1] * (1.0 + kCorners[a][0] * s)};
}

using Triplet = Eigen::Triplet<double>;

SparseMatrix from_triplets(int dim, const std::vector<Triplet> &trips)
{
  SparseMatrix A(dim, dim);
  A.setFromTriplets(trips.begin(), trips.end());
  A.prune(0.0, 0.0); // drop entries that cancelled exactly
  A.makeCompressed();
  return A;
}

void check_partition_of_unity()
{
  for (const auto &q : kQuadPts)
  {
    double s = 0.0;
    for (int a = 0; a < 4; a++)
    {
      s += shape(a, q[0], q[1]);
    }
    if (std::abs(s - 1.0) > 1e-14)
    {
      throw std::logic_error("fem: Q1 partition of unity violated at quadrature point");
    }
  }
}

} // namespace

std::vector<SparseMatrix> assemble_diffusion_blocks(const StructuredMesh &mesh)
{
  check_partition_of_unity();
  const int nsub = mesh.num_subdomains();
  std::vector<std::vector<Triplet>> trips(nsub);

  // Local stiffness on an h x h square; the Jacobian factors cancel so the
  // element matrix is h-independent.
  std::array<std::array<double, 4>, 4> ke{};
  for (const auto &q : kQuadPts)
  {
    std::array<std::array<double, 2>, 4> g;
    for (int a = 0; a < 4; a++)
    {
      g[a] = shape_grad_ref(a, q[0], q[1]);
    }
    for (int a = 0; a < 4; a++)
    {
      for (int b = 0; b < 4; b++)
      {
        ke[a][b] += kQuadWt * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
      }
    }
  }

  for (int e = 0; e < mesh.num_elements(); e++)
  {
    const auto nodes = mesh.element_nodes(e);
    auto &dst = trips[mesh.element_subdomain(e) - 1];
    for (int a = 0; a < 4; a++)
    {
      for (int b = 0; b < 4; b++)
      {
        dst.emplace_back(nodes[a], nodes[b], ke[a][b]);
      }
    }
  }

  std::vector<SparseMatrix> blocks;
  blocks.reserve(nsub);
  for (int m = 0; m < nsub; m++)
  {
    blocks.push_back(from_triplets(mesh.num_nodes(), trips[m]));
  }
  return blocks;
}

SparseMatrix assemble_convection(const StructuredMesh &mesh, const std::array<double, 2> &w)
{
  check_partition_of_unity();
  const double h = mesh.h();

  // (w . grad u, v): one factor of the h/2 chain rule survives.
  std::array<std::array<double, 4>, 4> ne{};
  for (const auto &q : kQuadPts)
  {
    for (int a = 0; a < 4; a++)
    {
      const double va = shape(a, q[0], q[1]);
      for (int b = 0; b < 4; b++)
      {
        const auto g = shape_grad_ref(b, q[0], q[1]);
        ne[a][b] += kQuadWt * (h / 2.0) * (w[0] * g[0] + w[1] * g[1]) * va;
      }
    }
  }

  std::vector<Triplet> trips;
  trips.reserve(16 * mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); e++)
  {
    const auto nodes = mesh.element_nodes(e);
    for (int a = 0; a < 4; a++)
    {
      for (int b = 0; b < 4; b++)
      {
        trips.emplace_back(nodes[a], nodes[b], ne[a][b]);
      }
    }
  }
  return from_triplets(mesh.num_nodes(), trips);
}

std::vector<SparseMatrix> assemble_sd_blocks(const StructuredMesh &mesh,
                                             const std::array<double, 2> &w)
{
  if (w[0] * w[0] + w[1] * w[1] <= 0.0)
  {
    throw std::invalid_argument("fem: streamline-diffusion blocks need |w| > 0");
  }
  const int nsub = mesh.num_subdomains();

  // (w . grad phi_a, w . grad phi_b): Jacobian factors cancel as for the
  // stiffness term.
  std::array<std::array<double, 4>, 4> se{};
  for (const auto &q : kQuadPts)
  {
    std::array<double, 4> wg;
    for (int a = 0; a < 4; a++)
    {
      const auto g = shape_grad_ref(a, q[0], q[1]);
      wg[a] = w[0] * g[0] + w[1] * g[1];
    }
    for (int a = 0; a < 4; a++)
    {
      for (int b = 0; b < 4; b++)
      {
        se[a][b] += kQuadWt * wg[a] * wg[b];
      }
    }
  }

  std::vector<std::vector<Triplet>> trips(nsub);
  for (int e = 0; e < mesh.num_elements(); e++)
  {
    const auto nodes = mesh.element_nodes(e);
    auto &dst = trips[mesh.element_subdomain(e) - 1];
    for (int a = 0; a < 4; a++)
    {
      for (int b = 0; b < 4; b++)
      {
        dst.emplace_back(nodes[a], nodes[b], se[a][b]);
      }
    }
  }

  std::vector<SparseMatrix> blocks;
  blocks.reserve(nsub);
  for (int m = 0; m < nsub; m++)
  {
    blocks.push_back(from_triplets(mesh.num_nodes(), trips[m]));
  }
  return blocks;
}

Vector assemble_load(const StructuredMesh &mesh, double f_const)
{
  const double h = mesh.h();
  Vector f = Vector::Zero(mesh.num_nodes());
  // Each Q1 basis function integrates to h^2/4 over one element.
  const double entry = f_const * h * h / 4.0;
  for (int e = 0; e < mesh.num_elements(); e++)
  {
    for (int node : mesh.element_nodes(e))
    {
      f[node] += entry;
    }
  }
  return f;
}

DirichletLifting build_benchmark_lifting(const StructuredMesh &mesh)
{
  const int n = mesh.n();
  DirichletLifting lift;
  lift.u_g = Vector::Zero(mesh.num_nodes());
  lift.full_to_interior.assign(mesh.num_nodes(), -1);
  lift.interior = mesh.interior_nodes();
  for (int k = 0; k < lift.num_interior(); k++)
  {
    lift.full_to_interior[lift.interior[k]] = k;
  }
  for (int node : mesh.boundary_nodes())
  {
    const int ix = node % (n + 1), iy = node / (n + 1);
    // g_D = 1 on x1 = -1 and on the bottom segment -1 <= x1 <= 0; the index
    // test ix <= n/2 realizes the closed interval including the corner (0,-1).
    if (ix == 0 || (iy == 0 && 2 * ix <= n))
    {
      lift.u_g[node] = 1.0;
    }
  }
  return lift;
}

Vector DirichletLifting::restrict_interior(const Vector &full) const
{
  Vector v(num_interior());
  for (int k = 0; k < num_interior(); k++)
  {
    v[k] = full[interior[k]];
  }
  return v;
}

Vector DirichletLifting::prolongate(const Vector &interior_values) const
{
  Vector full = u_g;
  for (int k = 0; k < num_interior(); k++)
  {
    full[interior[k]] = interior_values[k];
  }
  return full;
}

void SparseSolver::factorize(const SparseMatrix &A)
{
  A_ = A; // SparseLU wants column-major storage
  if (!analyzed_)
  {
    lu_.analyzePattern(A_);
    analyzed_ = true;
  }
  lu_.factorize(A_);
  if (lu_.info() != Eigen::Success)
  {
    throw SolverError("sparse factorization failed: " + lu_.lastErrorMessage());
  }
}

Vector SparseSolver::solve(const Vector &b) const
{
  Vector x = lu_.solve(b);
  const double bnorm = b.norm();
  const double rel = bnorm > 0.0 ? (A_ * x - b).norm() / bnorm : (A_ * x).norm();
  if (!(rel <= 1e-10))
  {
    // SparseLU does not expose pivots directly; report the smallest scaled
    // diagonal recoverable from the factorization determinant as a proxy.
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "sparse solve: relative residual %.3e exceeds 1e-10 "
                  "(log2 |det| = %.3e, likely near-singular pivot)",
                  rel, lu_.logAbsDeterminant() / std::log(2.0));
    throw SolverError(buf);
  }
  return x;
}

Vector solve_sparse(const SparseMatrix &A, const Vector &b)
{
  SparseSolver solver;
  solver.factorize(A);
  return solver.solve(b);
}

void write_matrix_market(const SparseMatrix &A, const std::string &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << A.rows() << " " << A.cols() << " " << A.nonZeros() << "\n";
  char buf[64];
  for (int r = 0; r < A.outerSize(); r++)
  {
    for (SparseMatrix::InnerIterator it(A, r); it; ++it)
    {
      std::snprintf(buf, sizeof(buf), "%d %d %.16e\n", static_cast<int>(it.row()) + 1,
                    static_cast<int>(it.col()) + 1, it.value());
      out << buf;
    }
  }
}

} // namespace rbc
