// SPDX-License-Identifier: Apache-2.0

#include "rbc/mesh.hpp"

namespace rbc
{

StructuredMesh::StructuredMesh(int n, int subdiv_x, int subdiv_y)
  : n_(n), subdiv_x_(subdiv_x), subdiv_y_(subdiv_y), h_(2.0 / n)
{
  if (n < 2)
  {
    throw std::invalid_argument("mesh: n must be at least 2, got " + std::to_string(n));
  }
  if (subdiv_x < 1 || subdiv_y < 1)
  {
    throw std::invalid_argument("mesh: partition counts must be positive");
  }
  if (n % subdiv_x != 0 || n % subdiv_y != 0)
  {
    throw std::invalid_argument("mesh: partition (" + std::to_string(subdiv_x) + ", " +
                                std::to_string(subdiv_y) + ") does not divide n = " +
                                std::to_string(n));
  }

  const int cells_x = n / subdiv_x, cells_y = n / subdiv_y;
  element_subdomain_.resize(n * n);
  for (int ey = 0; ey < n; ey++)
  {
    for (int ex = 0; ex < n; ex++)
    {
      const int sx = ex / cells_x, sy = ey / cells_y;
      element_subdomain_[ey * n + ex] = sx * subdiv_y + sy + 1;
    }
  }

  for (int node = 0; node < num_nodes(); node++)
  {
    if (is_boundary_node(node))
    {
      boundary_nodes_.push_back(node);
    }
    else
    {
      interior_nodes_.push_back(node);
    }
  }
}

std::vector<int> StructuredMesh::inflow_nodes(const std::array<double, 2> &w) const
{
  // Inflow where w . n < 0 with n the outward normal of the boundary face.
  std::vector<int> nodes;
  for (int node : boundary_nodes_)
  {
    const int ix = node % (n_ + 1), iy = node / (n_ + 1);
    const bool in = (ix == 0 && w[0] > 0) || (iy == 0 && w[1] > 0) ||
                    (ix == n_ && w[0] < 0) || (iy == n_ && w[1] < 0);
    if (in)
    {
      nodes.push_back(node);
    }
  }
  return nodes;
}

std::vector<int> StructuredMesh::outflow_nodes(const std::array<double, 2> &w) const
{
  std::vector<int> nodes;
  for (int node : boundary_nodes_)
  {
    const int ix = node % (n_ + 1), iy = node / (n_ + 1);
    const bool out = (ix == 0 && w[0] < 0) || (iy == 0 && w[1] < 0) ||
                     (ix == n_ && w[0] > 0) || (iy == n_ && w[1] > 0);
    if (out)
    {
      nodes.push_back(node);
    }
  }
  return nodes;
}

StructuredMesh build_mesh(int n, int subdiv_x, int subdiv_y)
{
  return StructuredMesh(n, subdiv_x, subdiv_y);
}

} // namespace rbc
