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

#include "facetsim/similarity.hpp"

#include <algorithm>
#include <string>

#include "facetsim/errors.hpp"

namespace facetsim::similarity {

AspectSelection::AspectSelection(std::vector<std::size_t> indices) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  indices_.erase(std::unique(indices_.begin(), indices_.end()), indices_.end());
  if (indices_.empty()) throw InvalidInput("aspect selection must be nonempty");
}

AspectSelection AspectSelection::all(std::size_t rows) {
  std::vector<std::size_t> idx(rows);
  for (std::size_t i = 0; i < rows; ++i) idx[i] = i;
  return AspectSelection(std::move(idx));
}

MatchResult f_ts(const DistanceMatrix& d) {
  ot::validate_distances(d);
  SingleMatch best;
  double best_value = d(0, 0);
  // Row-major scan with strict '<' keeps the lexicographically first minimum.
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      if (d(i, j) < best_value) {
        best_value = d(i, j);
        best = {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      }
    }
  }
  return {best_value, best};
}

MatchResult f_ot(const DistanceMatrix& d, double tau, const ot::SinkhornOptions& options) {
  auto plan = ot::sinkhorn(d, ot::marginals(d, tau), options);
  const double cost = plan.cost;
  return {cost, std::move(plan)};
}

MatchResult f_att(const DistanceMatrix& d, double tau, AttentionNorm norm) {
  ot::validate_distances(d);
  if (!(tau > 0.0)) throw InvalidInput("f_att: tau must be positive");
  Matrix weights(d.rows(), d.cols());
  double distance = 0.0;
  if (norm == AttentionNorm::kJoint) {
    const Vector flat = Eigen::Map<const Vector>(d.data(), d.size());
    const Vector a = ot::softmax_neg(flat, tau);
    weights = Eigen::Map<const Matrix>(a.data(), d.rows(), d.cols());
    distance = (d.array() * weights.array()).sum();
  } else {
    // Each row carries mass 1/N so that distance = <D, weights> in both modes.
    const double share = 1.0 / static_cast<double>(d.rows());
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      weights.row(i) = share * ot::softmax_neg(d.row(i).transpose(), tau).transpose();
    }
    distance = (d.array() * weights.array()).sum();
  }
  return {distance, std::move(weights)};
}

DistanceMatrix restrict(const DistanceMatrix& d, const AspectSelection& sel) {
  DistanceMatrix out(static_cast<Eigen::Index>(sel.size()), d.cols());
  for (std::size_t k = 0; k < sel.size(); ++k) {
    const auto row = sel.indices()[k];
    if (row >= static_cast<std::size_t>(d.rows())) {
      throw InvalidInput("aspect index " + std::to_string(row) + " out of range");
    }
    out.row(static_cast<Eigen::Index>(k)) = d.row(static_cast<Eigen::Index>(row));
  }
  return out;
}

double score(const DistanceMatrix& d, ScoreKind kind, const ScoreParams& params) {
  switch (kind) {
    case ScoreKind::kSingle:
      return f_ts(d).distance;
    case ScoreKind::kOptimalTransport:
      return f_ot(d, params.tau, params.sinkhorn).distance;
    case ScoreKind::kAttention:
      return f_att(d, params.tau, params.attention).distance;
  }
  throw InvalidInput("unknown score kind");
}

ScoreKind parse_score_kind(std::string_view name) {
  if (name == "ts" || name == "single" || name == "max") return ScoreKind::kSingle;
  if (name == "ot") return ScoreKind::kOptimalTransport;
  if (name == "att") return ScoreKind::kAttention;
  throw InvalidInput("unknown scorer '" + std::string(name) + "' (expected ts|ot|att)");
}

std::string_view to_string(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kSingle: return "ts";
    case ScoreKind::kOptimalTransport: return "ot";
    case ScoreKind::kAttention: return "att";
  }
  return "?";
}

}  // namespace facetsim::similarity
