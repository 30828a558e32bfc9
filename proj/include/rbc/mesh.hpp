// SPDX-License-Identifier: Apache-2.0

#ifndef RBC_MESH_HPP
#define RBC_MESH_HPP

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace rbc
{

// Uniform quadrilateral grid on [-1,1]^2 with a rectangular subdomain
// partition. Node (ix,iy) has id iy*(n+1)+ix; element (ex,ey) has id ey*n+ex
// with counterclockwise corner nodes. Subdomains are indexed column-major
// from the bottom-left corner, so for a (1,ny) partition the index grows
// with the x2 coordinate.
class StructuredMesh
{
public:
  StructuredMesh(int n_cells_per_side, int subdiv_x, int subdiv_y);

  int n() const { return n_; }
  double h() const { return h_; }
  int num_nodes() const { return (n_ + 1) * (n_ + 1); }
  int num_elements() const { return n_ * n_; }
  int num_subdomains() const { return subdiv_x_ * subdiv_y_; }
  int subdiv_x() const { return subdiv_x_; }
  int subdiv_y() const { return subdiv_y_; }

  int node_id(int ix, int iy) const { return iy * (n_ + 1) + ix; }
  std::array<double, 2> node_coord(int node) const
  {
    const int ix = node % (n_ + 1), iy = node / (n_ + 1);
    return {-1.0 + ix * h_, -1.0 + iy * h_};
  }

  // Corner node ids of element e, counterclockwise from the bottom-left.
  std::array<int, 4> element_nodes(int e) const
  {
    const int ex = e % n_, ey = e / n_;
    const int n00 = node_id(ex, ey);
    return {n00, n00 + 1, n00 + n_ + 2, n00 + n_ + 1};
  }

  // 1-based subdomain index of element e.
  int element_subdomain(int e) const { return element_subdomain_[e]; }

  bool is_boundary_node(int node) const
  {
    const int ix = node % (n_ + 1), iy = node / (n_ + 1);
    return ix == 0 || iy == 0 || ix == n_ || iy == n_;
  }

  const std::vector<int> &boundary_nodes() const { return boundary_nodes_; }
  const std::vector<int> &interior_nodes() const { return interior_nodes_; }

  // Inflow part of the boundary for velocity w (w . outward normal < 0).
  std::vector<int> inflow_nodes(const std::array<double, 2> &w) const;
  std::vector<int> outflow_nodes(const std::array<double, 2> &w) const;

private:
  int n_;
  int subdiv_x_, subdiv_y_;
  double h_;
  std::vector<int> element_subdomain_;
  std::vector<int> boundary_nodes_;
  std::vector<int> interior_nodes_;
};

StructuredMesh build_mesh(int n, int subdiv_x, int subdiv_y);

} // namespace rbc

#endif // RBC_MESH_HPP
