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

#include "facetsim/ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <string>
#include <vector>

#include "facetsim/errors.hpp"

namespace facetsim::ot {

namespace {

void validate_marginals(const DistanceMatrix& d, const Marginals& m) {
  if (m.source.size() != d.rows() || m.target.size() != d.cols()) {
    throw InvalidInput("marginal lengths do not match distance matrix shape");
  }
  for (const Vector* x : {&m.source, &m.target}) {
    if (!x->allFinite() || (x->array() < 0.0).any()) {
      throw InvalidInput("marginals must be finite and nonnegative");
    }
    if (std::abs(x->sum() - 1.0) > 1e-9) throw InvalidInput("marginals must sum to 1");
  }
}

double log_sum_exp(const double* values, Eigen::Index n, Eigen::Index stride) {
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) hi = std::max(hi, values[i * stride]);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) acc += std::exp(values[i * stride] - hi);
  return hi + std::log(acc);
}

}  // namespace

Marginals Marginals::uniform(std::size_t rows, std::size_t cols) {
  const auto r = static_cast<Eigen::Index>(rows);
  const auto c = static_cast<Eigen::Index>(cols);
  return {Vector::Constant(r, 1.0 / static_cast<double>(rows)),
          Vector::Constant(c, 1.0 / static_cast<double>(cols))};
}

double l2_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                   const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return std::sqrt(std::max(acc, 0.0));
}

DistanceMatrix pairwise_l2(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidInput("pairwise_l2: dimension mismatch");
  DistanceMatrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = l2_distance(a.row(i), b.row(j));
  }
  return d;
}

void validate_distances(const DistanceMatrix& d) {
  if (d.size() == 0) throw InvalidInput("empty distance matrix");
  if (!d.allFinite() || (d.array() < 0.0).any()) {
    throw InvalidInput("distance matrix entries must be finite and nonnegative");
  }
}

Vector softmax_neg(const Vector& values, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("softmax temperature must be positive");
  Vector logits = -values / tau;
  logits.array() -= logits.maxCoeff();
  Vector out = logits.array().exp();
  // Clamp underflow so every sentence keeps strictly positive mass.
  out = out.cwiseMax(std::numeric_limits<double>::min());
  return out / out.sum();
}

Marginals marginals(const DistanceMatrix& d, double tau) {
  validate_distances(d);
  return {softmax_neg(d.rowwise().minCoeff(), tau),
          softmax_neg(d.colwise().minCoeff().transpose(), tau)};
}

double marginal_violation(const Matrix& plan, const Marginals& m) {
  const double rows = (plan.rowwise().sum() - m.source).cwiseAbs().maxCoeff();
  const double cols = (plan.colwise().sum().transpose() - m.target).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

TransportPlan sinkhorn(const DistanceMatrix& d, const Marginals& m, const SinkhornOptions& options) {
  validate_distances(d);
  validate_marginals(d, m);
  if (!(options.lambda > 0.0)) throw InvalidInput("sinkhorn: lambda must be positive");
  if (!(options.tol > 0.0)) throw InvalidInput("sinkhorn: tol must be positive");

  const Eigen::Index n = d.rows();
  const Eigen::Index n2 = d.cols();
  const Matrix neg_cost = -options.lambda * d;
  const Vector log_a = m.source.array().log();
  const Vector log_b = m.target.array().log();

  Vector u = Vector::Zero(n);
  Vector v = Vector::Zero(n2);
  Matrix scratch(n, n2);

  TransportPlan plan;
  for (int it = 1; it <= options.max_iters; ++it) {
    // Column-major storage: a row has stride n, a column is contiguous.
    scratch = neg_cost.rowwise() + v.transpose();
    for (Eigen::Index i = 0; i < n; ++i) u[i] = log_a[i] - log_sum_exp(&scratch(i, 0), n2, n);
    scratch = neg_cost.colwise() + u;
    for (Eigen::Index j = 0; j < n2; ++j) v[j] = log_b[j] - log_sum_exp(&scratch(0, j), n, 1);
    if (!u.allFinite() || !v.allFinite()) {
      throw NumericalError("sinkhorn: non-finite potential at iteration " + std::to_string(it));
    }
    plan.iterations = it;

    double violation = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double row = 0.0;
      for (Eigen::Index j = 0; j < n2; ++j) row += std::exp(u[i] + v[j] + neg_cost(i, j));
      violation = std::max(violation, std::abs(row - m.source[i]));
    }
    if (violation <= options.tol) {
      plan.converged = true;
      break;
    }
  }

  Matrix log_plan = (neg_cost.colwise() + u).rowwise() + v.transpose();
  plan.values = log_plan.array().exp();
  if (!plan.values.allFinite()) throw NumericalError("sinkhorn: non-finite transport plan");
  plan.cost = (d.array() * plan.values.array()).sum();
  // h(P) = -sum P log P; entries that underflowed to zero contribute nothing.
  double neg_entropy = 0.0;
  for (Eigen::Index k = 0; k < plan.values.size(); ++k) {
    if (plan.values(k) > 0.0) neg_entropy += plan.values(k) * log_plan(k);
  }
  plan.reg_value = plan.cost + neg_entropy / options.lambda;
  return plan;
}

namespace {

std::vector<long long> scale_to_integers(const Vector& x) {
  std::vector<long long> out(static_cast<std::size_t>(x.size()));
  std::vector<std::pair<double, std::size_t>> remainders;
  long long total = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double scaled = x[i] * static_cast<double>(kExactScale);
    out[static_cast<std::size_t>(i)] = static_cast<long long>(std::floor(scaled));
    total += out[static_cast<std::size_t>(i)];
    remainders.emplace_back(scaled - std::floor(scaled), static_cast<std::size_t>(i));
  }
  // Largest-remainder rounding so the integers sum to exactly kExactScale.
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  long long deficit = kExactScale - total;
  for (std::size_t k = 0; deficit > 0; k = (k + 1) % remainders.size(), --deficit) {
    ++out[remainders[k].second];
  }
  while (deficit < 0) {
    auto it = std::max_element(out.begin(), out.end());
    --*it;
    ++deficit;
  }
  return out;
}

struct Arc {
  int to;
  long long cap;
  double cost;
};

class FlowGraph {
 public:
  explicit FlowGraph(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

  int add_arc(int from, int to, long long cap, double cost) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, cap, cost});
    arcs_.push_back({from, 0, -cost});
    adj_[static_cast<std::size_t>(from)].push_back(id);
    adj_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  long long flow_on(int arc) const { return arcs_[static_cast<std::size_t>(arc) + 1].cap; }

  // Successive shortest paths with Bellman-Ford; returns augmentation count.
  int min_cost_flow(int source, int sink, long long demand) {
    const auto nodes = adj_.size();
    int augmentations = 0;
    while (demand > 0) {
      std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
      std::vector<int> via(nodes, -1);
      dist[static_cast<std::size_t>(source)] = 0.0;
      for (std::size_t round = 0; round + 1 < nodes; ++round) {
        bool changed = false;
        for (std::size_t u = 0; u < nodes; ++u) {
          if (!std::isfinite(dist[u])) continue;
          for (int id : adj_[u]) {
            const Arc& a = arcs_[static_cast<std::size_t>(id)];
            const auto to = static_cast<std::size_t>(a.to);
            if (a.cap > 0 && dist[u] + a.cost < dist[to] - 1e-12) {
              dist[to] = dist[u] + a.cost;
              via[to] = id;
              changed = true;
            }
          }
        }
        if (!changed) break;
      }
      if (via[static_cast<std::size_t>(sink)] < 0) throw NumericalError("exact_ot: infeasible flow");
      long long push = demand;
      for (int v = sink; v != source;) {
        const int id = via[static_cast<std::size_t>(v)];
        push = std::min(push, arcs_[static_cast<std::size_t>(id)].cap);
        v = arcs_[static_cast<std::size_t>(id ^ 1)].to;
      }
      for (int v = sink; v != source;) {
        const int id = via[static_cast<std::size_t>(v)];
        arcs_[static_cast<std::size_t>(id)].cap -= push;
        arcs_[static_cast<std::size_t>(id ^ 1)].cap += push;
        v = arcs_[static_cast<std::size_t>(id ^ 1)].to;
      }
      demand -= push;
      ++augmentations;
    }
    return augmentations;
  }

 private:
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> adj_;
};

// Finds a cycle in the bipartite support graph (rows 0..n-1, columns
// n..n+n2-1). Returns the cycle as an ordered list of (row, col) cells,
// or empty if the support is a forest.
std::vector<std::pair<Eigen::Index, Eigen::Index>> support_cycle(
    const Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>& flow) {
  const Eigen::Index n = flow.rows();
  const Eigen::Index n2 = flow.cols();
  const auto nodes = static_cast<std::size_t>(n + n2);
  std::vector<std::vector<std::size_t>> forest(nodes);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n2; ++j) {
      if (flow(i, j) == 0) continue;
      const auto u = static_cast<std::size_t>(i);
      const auto v = static_cast<std::size_t>(n + j);
      // Path from u to v in the current forest, if any.
      std::vector<std::size_t> parent(nodes, nodes);
      std::queue<std::size_t> q;
      parent[u] = u;
      q.push(u);
      while (!q.empty() && parent[v] == nodes) {
        const auto x = q.front();
        q.pop();
        for (auto y : forest[x]) {
          if (parent[y] == nodes) {
            parent[y] = x;
            q.push(y);
          }
        }
      }
      if (parent[v] == nodes) {
        forest[u].push_back(v);
        forest[v].push_back(u);
        continue;
      }
      // Walk v -> u along the path; close with the (i, j) edge.
      std::vector<std::pair<Eigen::Index, Eigen::Index>> cycle{{i, j}};
      for (auto x = v; x != u; x = parent[x]) {
        const auto p = parent[x];
        const auto row = static_cast<Eigen::Index>(x < static_cast<std::size_t>(n) ? x : p);
        const auto col = static_cast<Eigen::Index>(x < static_cast<std::size_t>(n) ? p : x) - n;
        cycle.emplace_back(row, col);
      }
      return cycle;
    }
  }
  return {};
}

}  // namespace

TransportPlan exact_ot(const DistanceMatrix& d, const Marginals& m) {
  validate_distances(d);
  validate_marginals(d, m);
  if (static_cast<std::size_t>(d.rows()) > kExactMaxSide ||
      static_cast<std::size_t>(d.cols()) > kExactMaxSide) {
    throw UnsupportedSize("exact_ot: at most 16 x 16 supported");
  }
  const Eigen::Index n = d.rows();
  const Eigen::Index n2 = d.cols();
  const auto supply = scale_to_integers(m.source);
  const auto demand = scale_to_integers(m.target);

  const int source = 0;
  const int sink = static_cast<int>(n + n2 + 1);
  FlowGraph graph(sink + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    graph.add_arc(source, static_cast<int>(1 + i), supply[static_cast<std::size_t>(i)], 0.0);
  }
  for (Eigen::Index j = 0; j < n2; ++j) {
    graph.add_arc(static_cast<int>(1 + n + j), sink, demand[static_cast<std::size_t>(j)], 0.0);
  }
  std::vector<int> cell_arc(static_cast<std::size_t>(n * n2));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n2; ++j) {
      cell_arc[static_cast<std::size_t>(i * n2 + j)] =
          graph.add_arc(static_cast<int>(1 + i), static_cast<int>(1 + n + j), kExactScale, d(i, j));
    }
  }
  TransportPlan plan;
  plan.iterations = graph.min_cost_flow(source, sink, kExactScale);
  plan.converged = true;

  Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic> flow(n, n2);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n2; ++j) flow(i, j) = graph.flow_on(cell_arc[static_cast<std::size_t>(i * n2 + j)]);
  }

  // Cancel cycles in the support (they have zero reduced cost at the
  // optimum) until the plan is a vertex with at most n + n2 - 1 nonzeros.
  for (auto cycle = support_cycle(flow); !cycle.empty(); cycle = support_cycle(flow)) {
    double delta_cost = 0.0;
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      delta_cost += (k % 2 == 0 ? 1.0 : -1.0) * d(cycle[k].first, cycle[k].second);
    }
    const std::size_t shrinking = delta_cost <= 0.0 ? 1 : 0;
    long long step = std::numeric_limits<long long>::max();
    for (std::size_t k = shrinking; k < cycle.size(); k += 2) {
      step = std::min(step, flow(cycle[k].first, cycle[k].second));
    }
    for (std::size_t k = 0; k < cycle.size(); ++k) {
      flow(cycle[k].first, cycle[k].second) += (k % 2 == shrinking) ? -step : step;
    }
  }

  plan.values = flow.cast<double>() / static_cast<double>(kExactScale);
  plan.cost = (d.array() * plan.values.array()).sum();
  plan.reg_value = plan.cost;
  return plan;
}

}  // namespace facetsim::ot
