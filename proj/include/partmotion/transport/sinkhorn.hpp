#pragma once

#include "partmotion/common.hpp"

namespace partmotion::transport {

struct SinkhornResult {
  double cost = 0.0;           // ⟨plan, Euclidean distance⟩, mean convention
  double marginal_error = 0.0; // max |row/col mass - 1/N| * N after iterating
  bool converged = false;      // marginal_error <= 1e-3
  int iterations = 0;
  Eigen::MatrixXd plan;        // transport plan, total mass 1
};

// Entropic-regularized transport on the squared-distance kernel
// exp(-d^2 / epsilon^2); epsilon is a length scale in object units. The
// reported cost is the plan-weighted mean Euclidean distance, matching the
// emd_exact convention. Log-domain symmetric (Jacobi) updates; swapping the
// clouds transposes the plan and leaves the cost unchanged.
// Non-convergence is reported through the result, never silently dropped.
SinkhornResult emd_sinkhorn(const PointCloud& a, const PointCloud& b,
                            double epsilon, int iters);

}  // namespace partmotion::transport
