#include "partmotion/transport/sinkhorn.hpp"

#include <cmath>
#include <stdexcept>

namespace partmotion::transport {

namespace {

// Row-wise log-sum-exp of M + broadcast row vector r.
Eigen::VectorXd lse_rows(const Eigen::MatrixXd& m, const Eigen::VectorXd& r) {
  Eigen::VectorXd out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const Eigen::VectorXd row = m.row(i).transpose() + r;
    const double mx = row.maxCoeff();
    out[i] = mx + std::log((row.array() - mx).exp().sum());
  }
  return out;
}

}  // namespace

SinkhornResult emd_sinkhorn(const PointCloud& a, const PointCloud& b,
                            double epsilon, int iters) {
  const Eigen::Index n = a.rows();
  if (b.rows() != n || n == 0) {
    throw std::invalid_argument("emd_sinkhorn: clouds differ in size or empty");
  }
  if (epsilon <= 0.0) {
    throw std::invalid_argument("emd_sinkhorn: epsilon must be positive");
  }
  if (iters <= 0) {
    throw std::invalid_argument("emd_sinkhorn: iters must be positive");
  }

  const double temp = epsilon * epsilon;
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist.row(i) = (b.rowwise() - a.row(i)).rowwise().norm().transpose();
  }
  const Eigen::MatrixXd neg_cost_over_t = -(dist.array().square() / temp);

  const double log_mass = -std::log(static_cast<double>(n));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);  // scaled by 1/T already
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);

  SinkhornResult res;
  const auto compute_plan = [&](Eigen::MatrixXd& plan) {
    plan = (neg_cost_over_t.colwise() + f).rowwise() + g.transpose();
    plan = (plan.array() + 2.0 * log_mass).exp().matrix();
  };
  const auto marginal_err = [&](const Eigen::MatrixXd& plan) {
    const double target = 1.0 / static_cast<double>(n);
    const double row_err =
        (plan.rowwise().sum().array() - target).abs().maxCoeff();
    const double col_err =
        (plan.colwise().sum().array() - target).abs().maxCoeff();
    return static_cast<double>(n) * std::max(row_err, col_err);
  };

  Eigen::MatrixXd plan;
  int it = 0;
  while (it < iters) {
    // Jacobi update: both potentials from the previous pair, so the scheme is
    // exactly symmetric under swapping the two clouds.
    const Eigen::VectorXd f_new =
        -lse_rows(neg_cost_over_t, g) - Eigen::VectorXd::Constant(n, log_mass);
    const Eigen::VectorXd g_new =
        -lse_rows(neg_cost_over_t.transpose(), f) -
        Eigen::VectorXd::Constant(n, log_mass);
    f = f_new;
    g = g_new;
    ++it;
    if (it % 10 == 0 || it == iters) {
      compute_plan(plan);
      if (marginal_err(plan) <= 1e-10) break;
    }
  }
  compute_plan(plan);

  res.iterations = it;
  res.marginal_error = marginal_err(plan);
  res.converged = res.marginal_error <= 1e-3;
  res.cost = (plan.array() * dist.array()).sum();
  res.plan = std::move(plan);
  return res;
}

}  // namespace partmotion::transport
