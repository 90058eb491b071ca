#pragma once

#include "fletcher/types.hpp"

#include <vector>

namespace fletcher::problems {

// N x N interior nodes of a uniform grid on (-1,1)^2 with spacing h = 2/(N+1).
// Dirichlet boundary values u = 0 are eliminated: boundary nodes carry no
// unknowns. Node (i, j) has index i + N*j and coordinates (-1 + (i+1)h, -1 + (j+1)h).
struct Grid {
  Index N = 0;
  double h = 0.0;

  explicit Grid(Index n) : N(n), h(2.0 / static_cast<double>(n + 1)) {}

  Index nodes() const { return N * N; }
  Index index(Index i, Index j) const { return i + N * j; }
  double coord(Index i) const { return -1.0 + static_cast<double>(i + 1) * h; }
};

// One edge of the 5-point stencil. `b < 0` marks an edge to a boundary node.
// The edge contributes kappa * d d^T to the stiffness matrix, where
// d = e_a - e_b (or e_a for boundary edges).
struct Edge {
  Index a = 0;
  Index b = -1;
};

std::vector<Edge> stencil_edges(const Grid& grid);

// Forcing -sin(w x1) sin(w x2), w = pi - 1/8, at the interior nodes.
Vector forcing(const Grid& grid);

// sum_e kappa_e d_e d_e^T as a sparse matrix.
SparseMatrix stiffness(const Grid& grid, const std::vector<Edge>& edges, const Vector& kappa);

}  // namespace fletcher::problems
