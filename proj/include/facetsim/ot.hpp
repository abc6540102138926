// Copyright 2026 The Authors.
//
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

#pragma once

#include <cstddef>

#include "facetsim/embeddings.hpp"

namespace facetsim::ot {

// N x N' matrix of nonnegative sentence-to-sentence distances.
using DistanceMatrix = Matrix;

struct Marginals {
  Vector source;  // mass over rows, sums to 1
  Vector target;  // mass over columns, sums to 1

  static Marginals uniform(std::size_t rows, std::size_t cols);
};

struct TransportPlan {
  Matrix values;
  double cost = 0.0;       // <D, P>
  double reg_value = 0.0;  // <D, P> - h(P) / lambda; equals cost for exact plans
  int iterations = 0;
  bool converged = false;
};

struct SinkhornOptions {
  double lambda = 20.0;
  int max_iters = 1000;
  double tol = 1e-6;
};

// Euclidean distance between two equally sized rows. Every distance in the
// library goes through this routine so that separate code paths agree bitwise.
double l2_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                   const Eigen::Ref<const Eigen::RowVectorXd>& b);

DistanceMatrix pairwise_l2(const Matrix& a, const Matrix& b);

// Throws InvalidInput if any entry is negative or non-finite, or D is empty.
void validate_distances(const DistanceMatrix& d);

// x_source = softmax(-rowmin(D) / tau), x_target = softmax(-colmin(D) / tau).
Marginals marginals(const DistanceMatrix& d, double tau);

// Numerically stable softmax(-values / tau).
Vector softmax_neg(const Vector& values, double tau);

// Entropy-regularized OT solved with log-domain Sinkhorn scaling. Stops when
// the largest row-marginal violation is <= tol (columns are exact after
// each sweep) or max_iters is hit; the latter only clears `converged`.
TransportPlan sinkhorn(const DistanceMatrix& d, const Marginals& m,
                       const SinkhornOptions& options = {});

// Largest absolute deviation of plan row/column sums from the marginals.
double marginal_violation(const Matrix& plan, const Marginals& m);

inline constexpr std::size_t kExactMaxSide = 16;
inline constexpr long long kExactScale = 1'000'000;

// Unregularized optimum by successive-shortest-path min-cost flow on the
// marginals scaled to integers with denominator kExactScale. The returned
// plan is a vertex of the transportation polytope.
TransportPlan exact_ot(const DistanceMatrix& d, const Marginals& m);

}  // namespace facetsim::ot
