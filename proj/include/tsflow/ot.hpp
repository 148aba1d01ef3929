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

#ifndef TSFLOW_OT_HPP_
#define TSFLOW_OT_HPP_

// Mini-batch optimal transport under squared-Euclidean cost. Points are the
// rows of the batch matrices.

#include <vector>

#include <Eigen/Core>

namespace tsflow::ot {

// costs(i, j) = |X0_i - X1_j|^2.
using CostMatrix = Eigen::MatrixXd;

struct Assignment {
  std::vector<int> perm;  // row i is matched to column perm[i]
  double total_cost = 0.0;
};

CostMatrix cost_matrix(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1);

// Exact minimum-cost perfect matching. Among optimal matchings the
// lexicographically smallest permutation is returned.
Assignment assign(const CostMatrix& cost);

// Mean squared transport cost of the optimal coupling.
double batch_w2(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1);

// Expected cost of a uniformly random pairing: the mean of all entries.
double random_coupling_cost(const CostMatrix& cost);

struct BatchW2 {
  double w2 = 0.0;
  double baseline = 0.0;
};

// batch_w2 and the random-coupling baseline from one cost matrix.
BatchW2 batch_w2_report(const Eigen::MatrixXd& x0, const Eigen::MatrixXd& x1);

}  // namespace tsflow::ot

#endif  // TSFLOW_OT_HPP_
