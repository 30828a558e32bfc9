// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include "rbc/affine.hpp"

using namespace rbc;

namespace
{

const std::array<double, 2> kVelocity = {std::sin(std::numbers::pi / 6.0),
                                         std::cos(std::numbers::pi / 6.0)};

// One-off monolithic assembler: builds the full streamline-diffusion operator
// for a concrete parameter value element by element, independent of the
// affine-term path under test.
SparseMatrix monolithic_interior_matrix(const StructuredMesh &mesh, const DirichletLifting &lift,
                                        double nu, const std::array<double, 2> &w,
                                        const Eigen::VectorXd &xi)
{
  const double speed = std::hypot(w[0], w[1]);
  const double h = mesh.h();
  const double g = 1.0 / std::sqrt(3.0);
  const std::array<std::array<double, 2>, 4> qpts = {
      {{-g, -g}, {g, -g}, {g, g}, {-g, g}}};
  const std::array<std::array<double, 2>, 4> corners = {{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}}};

  std::vector<Eigen::Triplet<double>> trips;
  for (int e = 0; e < mesh.num_elements(); e++)
  {
    const int m = mesh.element_subdomain(e);
    const double a_coeff = nu * xi[m - 1];
    const double delta = sd_delta_value(a_coeff, speed, h);
    const auto nodes = mesh.element_nodes(e);
    for (const auto &q : qpts)
    {
      std::array<double, 4> shape, wgrad;
      std::array<std::array<double, 2>, 4> grad;
      for (int a = 0; a < 4; a++)
      {
        shape[a] = 0.25 * (1.0 + corners[a][0] * q[0]) * (1.0 + corners[a][1] * q[1]);
        grad[a] = {0.25 * corners[a][0] * (1.0 + corners[a][1] * q[1]) * (2.0 / h),
                   0.25 * corners[a][1] * (1.0 + corners[a][0] * q[0]) * (2.0 / h)};
        wgrad[a] = w[0] * grad[a][0] + w[1] * grad[a][1];
      }
      const double jw = h * h / 4.0;
      for (int a = 0; a < 4; a++)
      {
        for (int b = 0; b < 4; b++)
        {
          const double diff = a_coeff * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
          const double conv = wgrad[b] * shape[a];
          const double stab = delta * wgrad[a] * wgrad[b];
          trips.emplace_back(nodes[a], nodes[b], jw * (diff + conv + stab));
        }
      }
    }
  }
  SparseMatrix full(mesh.num_nodes(), mesh.num_nodes());
  full.setFromTriplets(trips.begin(), trips.end());

  std::vector<Eigen::Triplet<double>> inner;
  for (int r = 0; r < full.outerSize(); r++)
  {
    const int ri = lift.full_to_interior[r];
    if (ri < 0)
    {
      continue;
    }
    for (SparseMatrix::InnerIterator it(full, r); it; ++it)
    {
      const int ci = lift.full_to_interior[it.col()];
      if (ci >= 0)
      {
        inner.emplace_back(ri, ci, it.value());
      }
    }
  }
  SparseMatrix A(lift.num_interior(), lift.num_interior());
  A.setFromTriplets(inner.begin(), inner.end());
  return A;
}

double max_abs_diff(const SparseMatrix &A, const SparseMatrix &B)
{
  SparseMatrix D = A - B;
  double worst = 0.0;
  for (int r = 0; r < D.outerSize(); r++)
  {
    for (SparseMatrix::InnerIterator it(D, r); it; ++it)
    {
      worst = std::max(worst, std::abs(it.value()));
    }
  }
  return worst;
}

} // namespace

TEST_CASE("coefficient functions")
{
  const CoefficientFn c = CoefficientFn::constant(2.5);
  const CoefficientFn lin = CoefficientFn::linear_in_xi(2, 0.5);
  Eigen::VectorXd xi(3);
  xi << 0.2, 0.4, 0.9;
  CHECK(c(xi) == 2.5);
  CHECK(lin(xi) == doctest::Approx(0.2).epsilon(1e-15));

  // Well-resolved diffusion keeps the stabilization off: nu = 1/2, xi = 1,
  // h = 2/128 gives P = h < 1.
  CHECK(sd_delta_value(0.5 * 1.0, 1.0, 2.0 / 128.0) == 0.0);
  // Convection-dominated element: P > 1 activates delta.
  const double d = sd_delta_value(0.05 * 0.01, 1.0, 2.0 / 128.0);
  CHECK(d > 0.0);
  CHECK(d < 2.0 / 128.0);

  CHECK(c.describe() == "constant(2.5)");
  CHECK(lin.describe().find("linear_in_xi(m=2") == 0);
}

TEST_CASE("benchmark affine structure")
{
  const StructuredMesh mesh = build_mesh(8, 2, 2);
  const ParamBox box(4, 0.01, 1.0);
  const AffineSystem sys = build_benchmark(mesh, 0.5, kVelocity, box);

  CHECK(sys.num_operator_terms() == 9);  // 2M + 1
  CHECK(sys.num_forcing_terms() == 10);  // base load + lifting per term
  CHECK(sys.num_interior() == 7 * 7);

  // Identical parameters give bitwise identical assemblies.
  const Eigen::VectorXd c = box.anchor();
  const auto [A1, f1] = sys.assemble_at(c);
  const auto [A2, f2] = sys.assemble_at(c);
  CHECK(max_abs_diff(A1, A2) == 0.0);
  CHECK((f1 - f2).norm() == 0.0);

  // All coordinates equal: the diffusion part collapses to nu xi_1 sum K_m.
  Eigen::VectorXd same = Eigen::VectorXd::Constant(4, 0.37);
  const auto [As, fs] = sys.assemble_at(same);
  SparseMatrix manual = 0.5 * 0.37 * sys.operator_term(0);
  for (int m = 1; m < 4; m++)
  {
    manual += 0.5 * 0.37 * sys.operator_term(m);
  }
  manual += sys.operator_term(4); // convection
  for (int m = 0; m < 4; m++)
  {
    manual += sys.operator_coeff(5 + m)(same) * sys.operator_term(5 + m);
  }
  CHECK(max_abs_diff(As, manual) < 1e-15);

  CHECK_THROWS_AS(sys.assemble_at(Eigen::VectorXd::Constant(4, 2.0)), std::invalid_argument);
}

TEST_CASE("affine exactness against the monolithic assembler")
{
  const StructuredMesh mesh = build_mesh(8, 2, 2);
  const ParamBox box(4, 0.01, 1.0);
  const DirichletLifting lift = build_benchmark_lifting(mesh);

  for (double nu : {0.5, 0.05})
  {
    const AffineSystem sys = build_benchmark(mesh, nu, kVelocity, box);
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> unif(0.01, 1.0);
    for (int trial = 0; trial < 20; trial++)
    {
      Eigen::VectorXd xi(4);
      for (int m = 0; m < 4; m++)
      {
        xi[m] = unif(rng);
      }
      const auto [A, f] = sys.assemble_at(xi);
      const SparseMatrix oracle = monolithic_interior_matrix(mesh, lift, nu, kVelocity, xi);
      CHECK(max_abs_diff(A, oracle) < 1e-12);
    }
  }
}

TEST_CASE("forcing reproduces the lifted right-hand side")
{
  const StructuredMesh mesh = build_mesh(8, 2, 2);
  const ParamBox box(4, 0.01, 1.0);
  const AffineSystem sys = build_benchmark(mesh, 0.05, kVelocity, box);
  const DirichletLifting lift = build_benchmark_lifting(mesh);

  const auto diffusion = assemble_diffusion_blocks(mesh);
  const auto convection = assemble_convection(mesh, kVelocity);
  const auto sd = assemble_sd_blocks(mesh, kVelocity);
  const Vector base = assemble_load(mesh, 1.0);

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  for (int trial = 0; trial < 10; trial++)
  {
    Eigen::VectorXd xi(4);
    for (int m = 0; m < 4; m++)
    {
      xi[m] = unif(rng);
    }
    // Oracle: f - A_xi u_g assembled on the full grid.
    SparseMatrix A_full = 0.05 * xi[0] * diffusion[0];
    for (int m = 1; m < 4; m++)
    {
      A_full += 0.05 * xi[m] * diffusion[m];
    }
    A_full += convection;
    for (int m = 0; m < 4; m++)
    {
      A_full += sd_delta_value(0.05 * xi[m], 1.0, mesh.h()) * sd[m];
    }
    const Vector expected = lift.restrict_interior(base) -
                            lift.restrict_interior(A_full * lift.u_g);
    const auto [A, f] = sys.assemble_at(xi);
    CHECK((f - expected).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("difference quotient of the operator")
{
  const StructuredMesh mesh = build_mesh(8, 2, 2);
  const ParamBox box(4, 0.01, 1.0);
  const double nu = 0.5;
  const AffineSystem sys = build_benchmark(mesh, nu, kVelocity, box);

  // Inside the stabilized region delta(xi) = h/2 - nu xi so the derivative
  // of the coefficient is -nu; outside it vanishes. With h = 0.25 the
  // threshold sits at xi = h/(2 nu) = 0.25.
  const double active = 0.1;
  const double inactive = 0.9;
  const double step = 1e-7;

  for (double base : {active, inactive})
  {
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(4, 0.3), hi = lo;
    lo[1] = base - step;
    hi[1] = base + step;
    const auto [Alo, flo] = sys.assemble_at(lo);
    const auto [Ahi, fhi] = sys.assemble_at(hi);
    SparseMatrix quotient = (Ahi - Alo) * (0.5 / step);
    const double ddelta = base == active ? -nu : 0.0;
    SparseMatrix expected = nu * sys.operator_term(1) + ddelta * sys.operator_term(6);
    CHECK(max_abs_diff(quotient, expected) < 1e-6);
  }
}

TEST_CASE("full solve")
{
  const StructuredMesh mesh = build_mesh(32, 2, 2);
  const ParamBox box(4, 0.01, 1.0);
  const AffineSystem sys = build_benchmark(mesh, 0.5, kVelocity, box);

  const Snapshot snap = sys.full_solve(box.anchor());
  CHECK(snap.full.size() == mesh.num_nodes());

  // Residual contract.
  const auto [A, f] = sys.assemble_at(box.anchor());
  CHECK((A * snap.interior - f).norm() / f.norm() <= 1e-10);

  // Physical range of the stabilized solution: boundary data in [0,1] with a
  // constant source; small over/undershoot near the layers is acceptable.
  CHECK(snap.full.minCoeff() > -0.05);
  CHECK(snap.full.maxCoeff() < 1.8); // observed peak 1.63 at the anchor

  // Determinism.
  const Snapshot again = sys.full_solve(box.anchor());
  CHECK((snap.full - again.full).norm() == 0.0);

  // Coefficient-scaling equivalence: nu * xi is invariant under nu -> 10 nu,
  // xi -> xi/10 (with the box scaled accordingly).
  const ParamBox scaled_box(4, 0.001, 0.1);
  const AffineSystem scaled = build_benchmark(mesh, 5.0, kVelocity, scaled_box);
  Eigen::VectorXd xi = Eigen::VectorXd::Constant(4, 0.4);
  xi[2] = 0.9;
  const Snapshot a = sys.full_solve(xi);
  const Snapshot b = scaled.full_solve(xi / 10.0);
  CHECK((a.full - b.full).lpNorm<Eigen::Infinity>() < 1e-10);
}
