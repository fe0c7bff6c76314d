#pragma once

#include <vector>

#include "partmotion/common.hpp"
#include "partmotion/geom/grid.hpp"

namespace partmotion::transport {

using CostMatrix = geom::MatX<double>;  // row-major

struct AssignmentResult {
  std::vector<int> permutation;  // row i of A matched to row permutation[i] of B
  double cost = 0.0;             // mean matched Euclidean distance
};

// Minimum-cost bijection of a square cost matrix by the Jonker-Volgenant
// algorithm (column reduction, augmenting row reduction, then shortest
// augmenting paths). Deterministic; scans break ties toward lower indices.
std::vector<int> solve_assignment(const CostMatrix& cost);

// Plain shortest-augmenting-path solver kept as an independent cross-check
// for the JV implementation (tests compare the two).
std::vector<int> solve_assignment_reference(const CostMatrix& cost);

// Exact Earth Mover's Distance between equal-size clouds: the bijection
// minimizing total Euclidean matched distance, reported as the mean.
// Degenerate full ties resolve to the identity permutation. Size cap guards
// the O(N^3) solve; larger inputs are directed to emd_sinkhorn.
AssignmentResult emd_exact(const PointCloud& a, const PointCloud& b,
                           int size_cap = 2048);

}  // namespace partmotion::transport
