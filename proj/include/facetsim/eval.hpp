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
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "facetsim/retrieval.hpp"

namespace facetsim::eval {

using retrieval::RankedList;

struct GoldPool {
  std::string query_id;
  std::map<std::string, int> judgments;  // doc_id -> grade >= 0
};

enum class Gain { kExponential, kLinear };

struct MetricOptions {
  double p = 0.2;              // NDCG cutoff as a fraction of the pool size
  int relevance_threshold = 1; // grade >= threshold counts as relevant for AP
  Gain gain = Gain::kExponential;
};

// Mean over relevant docs of precision at their rank; relevant docs missing
// from the ranking count as misses. nullopt when the pool has no relevant doc.
std::optional<double> average_precision(const RankedList& ranked, const GoldPool& gold,
                                         int relevance_threshold = 1);

// NDCG at K = max(1, ceil(p * |pool|)) with gain 2^g - 1 (or g) and
// discount 1 / log2(rank + 1). nullopt when the ideal DCG is zero.
std::optional<double> ndcg_percent(const RankedList& ranked, const GoldPool& gold, double p,
                                   Gain gain = Gain::kExponential);

struct QueryMetrics {
  double ap = 0.0;
  double ndcg = 0.0;
};

struct MetricReport {
  std::map<std::string, QueryMetrics> per_query;
  double map = 0.0;
  double mean_ndcg = 0.0;
  double p = 0.2;
  std::vector<std::string> warnings;
};

// Rankings are matched to pools by query_id; queries without a ranking or
// without relevant docs are skipped with a warning.
MetricReport evaluate(const std::vector<RankedList>& rankings, const std::vector<GoldPool>& gold,
                      const MetricOptions& options = {});

std::string report_json(const MetricReport& report);

// Per-query metric values of one hyperparameter configuration.
using QueryScores = std::map<std::string, double>;

struct CrossValidation {
  std::vector<std::vector<std::string>> folds;
  std::vector<std::string> chosen;  // configuration picked for each held-out fold
  std::vector<double> fold_means;   // held-out mean of the chosen configuration
  double aggregate = 0.0;
};

// Two-fold protocol: queries are split by seed; for each fold the
// configuration with the best mean on the other fold is evaluated on it.
// The aggregate is the mean of the two held-out means.
CrossValidation two_fold_cv(const std::map<std::string, QueryScores>& by_config, std::uint64_t seed);

struct Judgment {
  std::string query;
  std::string doc;
  int grade = 0;
};

struct Reformulation {
  std::vector<GoldPool> pools;        // query_id is the sampled query document
  std::map<std::string, std::string> source_query;  // new query id -> ad-hoc query
  std::vector<std::string> warnings;
};

// Ad-hoc judgments to query-by-document pools: per ad-hoc query, one
// grade-2 document becomes the query; the other relevant docs keep their
// grades and docs relevant only to other queries enter with grade 0.
Reformulation treccovid_reformulate(const std::vector<Judgment>& judgments, std::uint64_t seed);

std::vector<GoldPool> read_gold(const std::filesystem::path& path);
void write_gold(const std::vector<GoldPool>& pools, const std::filesystem::path& path);

}  // namespace facetsim::eval
