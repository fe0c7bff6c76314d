#include "partmotion/transport/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace partmotion::transport {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::vector<int> solve_assignment_reference(const CostMatrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) {
    throw std::invalid_argument("solve_assignment: matrix not square");
  }
  // Shortest augmenting path with potentials, 1-based internal indexing.
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) -
                           u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) {
    if (p[static_cast<std::size_t>(j)] > 0) {
      row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] =
          j - 1;
    }
  }
  return row_to_col;
}

std::vector<int> solve_assignment(const CostMatrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) {
    throw std::invalid_argument("solve_assignment: matrix not square");
  }
  std::vector<int> x(static_cast<std::size_t>(n), -1);  // row -> col
  std::vector<int> y(static_cast<std::size_t>(n), -1);  // col -> row
  std::vector<double> v(static_cast<std::size_t>(n), 0.0);

  // Column reduction, scanned in reverse so low rows win ties.
  {
    std::vector<int> matches(static_cast<std::size_t>(n), 0);
    for (int j = n - 1; j >= 0; --j) {
      double min_c = cost(0, j);
      int imin = 0;
      for (int i = 1; i < n; ++i) {
        if (cost(i, j) < min_c) {
          min_c = cost(i, j);
          imin = i;
        }
      }
      v[static_cast<std::size_t>(j)] = min_c;
      if (++matches[static_cast<std::size_t>(imin)] == 1) {
        x[static_cast<std::size_t>(imin)] = j;
        y[static_cast<std::size_t>(j)] = imin;
      }
    }
    // Reduction transfer for rows assigned exactly once.
    for (int i = 0; i < n; ++i) {
      if (matches[static_cast<std::size_t>(i)] == 1) {
        const int j1 = x[static_cast<std::size_t>(i)];
        double min_r = kInf;
        for (int j = 0; j < n; ++j) {
          if (j != j1) {
            min_r = std::min(min_r, cost(i, j) - v[static_cast<std::size_t>(j)]);
          }
        }
        v[static_cast<std::size_t>(j1)] -= min_r;
      }
    }
    // Free rows feed the next phase.
  }
  std::vector<int> free_rows;
  for (int i = 0; i < n; ++i) {
    if (x[static_cast<std::size_t>(i)] < 0) free_rows.push_back(i);
  }

  // Augmenting row reduction, two sweeps. Bounded: on heavily tied cost
  // matrices the classic requeue loop can cycle for a long time shaving
  // vanishing dual increments, so leftover rows go to the shortest-path
  // phase instead.
  long arr_budget = 4L * n;
  for (int sweep = 0; sweep < 2 && !free_rows.empty(); ++sweep) {
    std::vector<int> next_free;
    std::size_t k = 0;
    while (k < free_rows.size()) {
      if (--arr_budget < 0) {
        // Hand everything still unassigned to the SP phase.
        for (; k < free_rows.size(); ++k) next_free.push_back(free_rows[k]);
        break;
      }
      const int i = free_rows[k++];
      // Two smallest reduced costs in row i.
      double u1 = cost(i, 0) - v[0];
      int j1 = 0;
      double u2 = kInf;
      int j2 = -1;
      for (int j = 1; j < n; ++j) {
        const double h = cost(i, j) - v[static_cast<std::size_t>(j)];
        if (h < u2) {
          if (h >= u1) {
            u2 = h;
            j2 = j;
          } else {
            u2 = u1;
            j2 = j1;
            u1 = h;
            j1 = j;
          }
        }
      }
      int i0 = y[static_cast<std::size_t>(j1)];
      if (u1 < u2) {
        v[static_cast<std::size_t>(j1)] -= u2 - u1;
      } else if (i0 >= 0 && j2 >= 0) {
        j1 = j2;
        i0 = y[static_cast<std::size_t>(j1)];
      }
      x[static_cast<std::size_t>(i)] = j1;
      y[static_cast<std::size_t>(j1)] = i;
      if (i0 >= 0) {
        x[static_cast<std::size_t>(i0)] = -1;
        if (u1 < u2) {
          // Re-examine the bumped row in this sweep.
          free_rows[--k] = i0;
        } else {
          next_free.push_back(i0);
        }
      }
    }
    free_rows = std::move(next_free);
  }

  // Shortest augmenting paths for the remaining free rows, with the column
  // list partitioned into [settled | current-distance batch | unknown].
  std::vector<double> d(static_cast<std::size_t>(n));
  std::vector<int> pred(static_cast<std::size_t>(n));
  std::vector<int> cols(static_cast<std::size_t>(n));
  for (const int row : free_rows) {
    for (int j = 0; j < n; ++j) {
      d[static_cast<std::size_t>(j)] = cost(row, j) - v[static_cast<std::size_t>(j)];
      pred[static_cast<std::size_t>(j)] = row;
      cols[static_cast<std::size_t>(j)] = j;
    }
    int lo = 0, hi = 0;
    int end_col = -1;
    double min_d = 0.0;
    while (end_col < 0) {
      if (lo == hi) {
        // Form the next equal-distance batch.
        min_d = d[static_cast<std::size_t>(cols[static_cast<std::size_t>(lo)])];
        for (int k = lo + 1; k < n; ++k) {
          min_d = std::min(min_d,
                           d[static_cast<std::size_t>(cols[static_cast<std::size_t>(k)])]);
        }
        hi = lo;
        for (int k = lo; k < n; ++k) {
          const int j = cols[static_cast<std::size_t>(k)];
          if (d[static_cast<std::size_t>(j)] <= min_d) {
            std::swap(cols[static_cast<std::size_t>(k)],
                      cols[static_cast<std::size_t>(hi)]);
            ++hi;
          }
        }
        for (int k = lo; k < hi && end_col < 0; ++k) {
          const int j = cols[static_cast<std::size_t>(k)];
          if (y[static_cast<std::size_t>(j)] < 0) end_col = j;
        }
        if (end_col >= 0) break;
      }
      const int j1 = cols[static_cast<std::size_t>(lo)];
      ++lo;
      const int irow = y[static_cast<std::size_t>(j1)];
      const double u1 = cost(irow, j1) - v[static_cast<std::size_t>(j1)] - min_d;
      for (int k = hi; k < n; ++k) {
        const int j = cols[static_cast<std::size_t>(k)];
        const double nd = cost(irow, j) - v[static_cast<std::size_t>(j)] - u1;
        if (nd < d[static_cast<std::size_t>(j)]) {
          d[static_cast<std::size_t>(j)] = nd;
          pred[static_cast<std::size_t>(j)] = irow;
          if (nd == min_d) {
            if (y[static_cast<std::size_t>(j)] < 0) {
              end_col = j;
              break;
            }
            std::swap(cols[static_cast<std::size_t>(k)],
                      cols[static_cast<std::size_t>(hi)]);
            ++hi;
          }
        }
      }
    }
    // Price update over settled columns (batch members scanned so far get a
    // zero increment).
    for (int k = 0; k < lo; ++k) {
      const int j = cols[static_cast<std::size_t>(k)];
      v[static_cast<std::size_t>(j)] += d[static_cast<std::size_t>(j)] - min_d;
    }
    // Augment along the predecessor chain.
    int j = end_col;
    while (true) {
      const int irow = pred[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(j)] = irow;
      const int jnext = x[static_cast<std::size_t>(irow)];
      x[static_cast<std::size_t>(irow)] = j;
      if (irow == row) break;
      j = jnext;
    }
  }
  return x;
}

AssignmentResult emd_exact(const PointCloud& a, const PointCloud& b,
                           int size_cap) {
  const Eigen::Index n = a.rows();
  if (b.rows() != n) {
    throw std::invalid_argument("emd_exact: clouds differ in size");
  }
  if (n == 0) {
    throw std::invalid_argument("emd_exact: empty clouds");
  }
  if (n > size_cap) {
    throw std::invalid_argument(
        "emd_exact: size exceeds exact-assignment cap; use emd_sinkhorn");
  }
  CostMatrix cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    cost.row(i) = (b.rowwise() - a.row(i)).rowwise().norm().transpose();
  }
  std::vector<int> perm = solve_assignment(cost);

  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    total += cost(i, perm[static_cast<std::size_t>(i)]);
  }
  // Lowest-index tie policy: when the identity bijection attains the optimum,
  // report it.
  const double identity_total = cost.diagonal().sum();
  if (identity_total <= total) {
    total = identity_total;
    for (Eigen::Index i = 0; i < n; ++i) {
      perm[static_cast<std::size_t>(i)] = static_cast<int>(i);
    }
  }
  AssignmentResult out;
  out.permutation = std::move(perm);
  out.cost = total / static_cast<double>(n);
  return out;
}

}  // namespace partmotion::transport
