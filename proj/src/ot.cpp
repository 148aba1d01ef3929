// Copyright 2026 The tsflow Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tsflow/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "tsflow/error.hpp"

namespace tsflow::ot {

namespace {

struct Potentials {
  std::vector<double> u, v;  // row / column duals, 1-based
  std::vector<int> perm;
};

// Shortest augmenting path Hungarian method, O(n^3). Keeps the dual
// potentials so that c(i, j) - u(i) - v(j) >= 0 with equality on the
// matching.
Potentials hungarian(const CostMatrix& c) {
  const int n = static_cast<int>(c.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = c(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  Potentials out{std::move(u), std::move(v), std::vector<int>(n)};
  for (int j = 1; j <= n; ++j) out.perm[p[j] - 1] = j - 1;
  return out;
}

// Augmenting path in the tight subgraph from `row` to any column reachable,
// restricted to rows > `fixed`. Used to test whether a partial lexicographic
// choice still extends to a perfect tight matching.
bool augment(int row, int fixed, const std::vector<std::vector<int>>& adj,
             std::vector<int>& row_of, std::vector<int>& col_of,
             std::vector<char>& seen, int target) {
  for (int j : adj[row]) {
    if (seen[j]) continue;
    seen[j] = 1;
    if (j == target) {
      row_of[j] = row;
      col_of[row] = j;
      return true;
    }
    const int r = row_of[j];
    if (r <= fixed) continue;
    if (augment(r, fixed, adj, row_of, col_of, seen, target)) {
      row_of[j] = row;
      col_of[row] = j;
      return true;
    }
  }
  return false;
}

}  // namespace

CostMatrix cost_matrix(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1) {
  if (x0.rows() != x1.rows() || x0.cols() != x1.cols())
    throw ValidationError("cost_matrix: shape mismatch (" +
                          std::to_string(x0.rows()) + "x" +
                          std::to_string(x0.cols()) + " vs " +
                          std::to_string(x1.rows()) + "x" +
                          std::to_string(x1.cols()) + ")");
  const Eigen::Index b = x0.rows();
  CostMatrix c(b, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < b; ++i)
      c(i, j) = (x0.row(i) - x1.row(j)).squaredNorm();
  return c;
}

Assignment assign(const CostMatrix& cost) {
  if (cost.rows() != cost.cols())
    throw ValidationError("assign: cost matrix must be square");
  if (!cost.allFinite())
    throw ValidationError("assign: cost matrix has non-finite entries");
  const int n = static_cast<int>(cost.rows());
  Assignment out;
  if (n == 0) return out;

  Potentials pot = hungarian(cost);
  const double tol =
      1e-12 * n * std::max(1.0, cost.cwiseAbs().maxCoeff());

  // Every optimal matching lives on the tight edges of an optimal dual.
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cost(i, j) - pot.u[i + 1] - pot.v[j + 1] <= tol) adj[i].push_back(j);

  std::vector<int> col_of = pot.perm, row_of(n);
  for (int i = 0; i < n; ++i) row_of[col_of[i]] = i;
  std::vector<char> seen(n);
  for (int i = 0; i < n; ++i) {
    for (int j : adj[i]) {
      if (j == col_of[i]) break;
      // Give column j to row i; its owner must reach the column i frees.
      const int r = row_of[j];
      if (r < i) continue;
      std::vector<int> trial_col = col_of, trial_row = row_of;
      const int freed = trial_col[i];
      trial_col[i] = j;
      trial_row[j] = i;
      std::fill(seen.begin(), seen.end(), 0);
      seen[j] = 1;
      if (augment(r, i, adj, trial_row, trial_col, seen, freed)) {
        col_of = std::move(trial_col);
        row_of = std::move(trial_row);
        break;
      }
    }
  }

  out.perm = std::move(col_of);
  for (int i = 0; i < n; ++i) out.total_cost += cost(i, out.perm[i]);
  return out;
}

double batch_w2(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1) {
  return batch_w2_report(x0, x1).w2;
}

double random_coupling_cost(const CostMatrix& cost) {
  if (cost.size() == 0) return 0.0;
  return cost.mean();
}

BatchW2 batch_w2_report(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1) {
  const CostMatrix c = cost_matrix(x0, x1);
  if (c.rows() == 0) throw ValidationError("batch_w2: empty batch");
  return BatchW2{assign(c).total_cost / static_cast<double>(c.rows()),
                 random_coupling_cost(c)};
}

}  // namespace tsflow::ot
