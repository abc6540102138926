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
#include <string_view>
#include <variant>
#include <vector>

#include "facetsim/ot.hpp"

namespace facetsim::similarity {

using ot::DistanceMatrix;

struct SingleMatch {
  std::size_t row = 0;
  std::size_t col = 0;
};

struct MatchResult {
  double distance = 0.0;
  // Single pair for f_ts, transport plan for f_ot, attention weights for f_att.
  std::variant<SingleMatch, ot::TransportPlan, Matrix> alignment;
};

// Sorted, unique subset of query sentence indices.
class AspectSelection {
 public:
  // Sorts and deduplicates; throws InvalidInput when empty.
  explicit AspectSelection(std::vector<std::size_t> indices);
  static AspectSelection all(std::size_t rows);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }

 private:
  std::vector<std::size_t> indices_;
};

// How the attention ablation normalizes softmax(-D / tau).
enum class AttentionNorm {
  kJoint,    // one distribution over all N*N' entries
  kRowwise,  // per-row softmax scaled by 1/N, so row scores are averaged
};

// Global minimum of D; ties go to the smallest row, then smallest column.
MatchResult f_ts(const DistanceMatrix& d);

// <D, P> with P from Sinkhorn on marginals(D, tau).
MatchResult f_ot(const DistanceMatrix& d, double tau,
                 const ot::SinkhornOptions& options = {});

MatchResult f_att(const DistanceMatrix& d, double tau,
                  AttentionNorm norm = AttentionNorm::kJoint);

// Rows of D picked by the selection, in selection order.
DistanceMatrix restrict(const DistanceMatrix& d, const AspectSelection& sel);

// Document scorers usable at inference time. The max-aligned ablation has no
// entry here: at inference it is the same function as kSingle.
enum class ScoreKind { kSingle, kOptimalTransport, kAttention };

struct ScoreParams {
  double tau = 5000.0;
  ot::SinkhornOptions sinkhorn{};
  AttentionNorm attention = AttentionNorm::kJoint;
};

double score(const DistanceMatrix& d, ScoreKind kind, const ScoreParams& params);

ScoreKind parse_score_kind(std::string_view name);
std::string_view to_string(ScoreKind kind);

}  // namespace facetsim::similarity
