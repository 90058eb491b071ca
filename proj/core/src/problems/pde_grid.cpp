#include "pde_grid.hpp"

#include <cmath>
#include <numbers>

namespace fletcher::problems {

std::vector<Edge> stencil_edges(const Grid& grid) {
  std::vector<Edge> edges;
  const Index N = grid.N;
  // Interior edges, each listed once.
  for (Index j = 0; j < N; ++j) {
    for (Index i = 0; i < N; ++i) {
      if (i + 1 < N) edges.push_back({grid.index(i, j), grid.index(i + 1, j)});
      if (j + 1 < N) edges.push_back({grid.index(i, j), grid.index(i, j + 1)});
    }
  }
  // Edges to the (eliminated) boundary.
  for (Index j = 0; j < N; ++j) {
    for (Index i = 0; i < N; ++i) {
      const Index k = grid.index(i, j);
      if (i == 0) edges.push_back({k, -1});
      if (i == N - 1) edges.push_back({k, -1});
      if (j == 0) edges.push_back({k, -1});
      if (j == N - 1) edges.push_back({k, -1});
    }
  }
  return edges;
}

Vector forcing(const Grid& grid) {
  const double w = std::numbers::pi - 0.125;
  Vector f(grid.nodes());
  for (Index j = 0; j < grid.N; ++j) {
    for (Index i = 0; i < grid.N; ++i) {
      f[grid.index(i, j)] = -std::sin(w * grid.coord(i)) * std::sin(w * grid.coord(j));
    }
  }
  return f;
}

SparseMatrix stiffness(const Grid& grid, const std::vector<Edge>& edges, const Vector& kappa) {
  std::vector<Triplet> trips;
  trips.reserve(edges.size() * 4);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [a, b] = edges[e];
    const double k = kappa[static_cast<Index>(e)];
    trips.emplace_back(a, a, k);
    if (b >= 0) {
      trips.emplace_back(b, b, k);
      trips.emplace_back(a, b, -k);
      trips.emplace_back(b, a, -k);
    }
  }
  SparseMatrix K(grid.nodes(), grid.nodes());
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

}  // namespace fletcher::problems
