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

#include "facetsim/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "facetsim/errors.hpp"

namespace facetsim::eval {

using nlohmann::json;

namespace {

int grade_of(const GoldPool& gold, const std::string& doc) {
  auto it = gold.judgments.find(doc);
  return it == gold.judgments.end() ? 0 : it->second;
}

double gain_of(int grade, Gain gain) {
  return gain == Gain::kExponential ? std::exp2(static_cast<double>(grade)) - 1.0 : static_cast<double>(grade);
}

std::size_t draw(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % n;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

}  // namespace

std::optional<double> average_precision(const RankedList& ranked, const GoldPool& gold,
                                         int relevance_threshold) {
  const auto relevant = std::count_if(gold.judgments.begin(), gold.judgments.end(),
                                      [&](const auto& j) { return j.second >= relevance_threshold; });
  if (relevant == 0) return std::nullopt;
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ranked.entries.size(); ++r) {
    if (grade_of(gold, ranked.entries[r].doc_id) >= relevance_threshold) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant);
}

std::optional<double> ndcg_percent(const RankedList& ranked, const GoldPool& gold, double p, Gain gain) {
  if (!(p > 0.0 && p < 1.0)) throw InvalidInput("ndcg p must be in (0, 1)");
  const double raw = p * static_cast<double>(gold.judgments.size());
  // The epsilon keeps e.g. 0.2 * 15 from rounding up to 4.
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(raw - 1e-9)));

  double dcg = 0.0;
  for (std::size_t r = 0; r < std::min(k, ranked.entries.size()); ++r) {
    dcg += gain_of(grade_of(gold, ranked.entries[r].doc_id), gain) / std::log2(static_cast<double>(r) + 2.0);
  }
  std::vector<int> grades;
  for (const auto& [doc, g] : gold.judgments) grades.push_back(g);
  std::sort(grades.begin(), grades.end(), std::greater<>());
  double ideal = 0.0;
  for (std::size_t r = 0; r < std::min(k, grades.size()); ++r) {
    ideal += gain_of(grades[r], gain) / std::log2(static_cast<double>(r) + 2.0);
  }
  if (ideal <= 0.0) return std::nullopt;
  return dcg / ideal;
}

MetricReport evaluate(const std::vector<RankedList>& rankings, const std::vector<GoldPool>& gold,
                      const MetricOptions& options) {
  MetricReport report;
  report.p = options.p;
  std::map<std::string, const RankedList*> by_query;
  for (const auto& r : rankings) by_query[r.query_id] = &r;
  double ap_sum = 0.0;
  double ndcg_sum = 0.0;
  for (const auto& pool : gold) {
    auto it = by_query.find(pool.query_id);
    if (it == by_query.end()) {
      report.warnings.push_back("no ranking for query '" + pool.query_id + "'");
      continue;
    }
    const auto ap = average_precision(*it->second, pool, options.relevance_threshold);
    const auto ndcg = ndcg_percent(*it->second, pool, options.p, options.gain);
    if (!ap || !ndcg) {
      report.warnings.push_back("query '" + pool.query_id + "' has no relevant documents; excluded");
      continue;
    }
    report.per_query[pool.query_id] = {*ap, *ndcg};
    ap_sum += *ap;
    ndcg_sum += *ndcg;
  }
  if (!report.per_query.empty()) {
    const auto n = static_cast<double>(report.per_query.size());
    report.map = ap_sum / n;
    report.mean_ndcg = ndcg_sum / n;
  }
  return report;
}

std::string report_json(const MetricReport& report) {
  json per = json::object();
  for (const auto& [q, m] : report.per_query) per[q] = {{"ap", m.ap}, {"ndcg", m.ndcg}};
  json j = {{"p", report.p},
            {"queries", report.per_query.size()},
            {"map", report.map},
            {"ndcg", report.mean_ndcg},
            {"per_query", per},
            {"warnings", report.warnings}};
  return j.dump(2);
}

CrossValidation two_fold_cv(const std::map<std::string, QueryScores>& by_config, std::uint64_t seed) {
  if (by_config.empty()) throw InvalidInput("two_fold_cv: no configurations");
  std::vector<std::string> queries;
  for (const auto& [q, v] : by_config.begin()->second) queries.push_back(q);
  for (const auto& [name, scores] : by_config) {
    if (scores.size() != queries.size() ||
        !std::all_of(queries.begin(), queries.end(), [&](const auto& q) { return scores.contains(q); })) {
      throw InvalidInput("two_fold_cv: configuration '" + name + "' covers different queries");
    }
  }
  if (queries.size() < 2) throw InvalidInput("two_fold_cv: need at least 2 queries");

  std::mt19937_64 rng(seed);
  for (std::size_t i = queries.size() - 1; i > 0; --i) std::swap(queries[i], queries[draw(rng, i + 1)]);
  CrossValidation cv;
  const std::size_t half = (queries.size() + 1) / 2;
  cv.folds.emplace_back(queries.begin(), queries.begin() + static_cast<std::ptrdiff_t>(half));
  cv.folds.emplace_back(queries.begin() + static_cast<std::ptrdiff_t>(half), queries.end());
  for (auto& f : cv.folds) std::sort(f.begin(), f.end());

  auto mean_on = [](const QueryScores& scores, const std::vector<std::string>& fold) {
    double s = 0.0;
    for (const auto& q : fold) s += scores.at(q);
    return s / static_cast<double>(fold.size());
  };
  for (std::size_t held = 0; held < 2; ++held) {
    const auto& tune = cv.folds[1 - held];
    const std::string* best = nullptr;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (const auto& [name, scores] : by_config) {
      const double m = mean_on(scores, tune);
      if (m > best_mean) {
        best_mean = m;
        best = &name;
      }
    }
    cv.chosen.push_back(*best);
    cv.fold_means.push_back(mean_on(by_config.at(*best), cv.folds[held]));
  }
  cv.aggregate = 0.5 * (cv.fold_means[0] + cv.fold_means[1]);
  return cv;
}

Reformulation treccovid_reformulate(const std::vector<Judgment>& judgments, std::uint64_t seed) {
  std::map<std::string, std::map<std::string, int>> by_query;
  for (const auto& j : judgments) by_query[j.query][j.doc] = j.grade;

  Reformulation out;
  std::mt19937_64 rng(seed);
  for (const auto& [query, docs] : by_query) {
    std::vector<std::string> top;
    for (const auto& [doc, g] : docs) {
      if (g == 2) top.push_back(doc);
    }
    if (top.empty()) {
      out.warnings.push_back("query '" + query + "' has no grade-2 document; skipped");
      continue;
    }
    const std::string sampled = top[draw(rng, top.size())];
    GoldPool pool;
    pool.query_id = sampled;
    for (const auto& [doc, g] : docs) {
      if (g > 0 && doc != sampled) pool.judgments[doc] = g;
    }
    if (pool.judgments.empty()) {
      out.warnings.push_back("query '" + query + "' has no other relevant documents; skipped");
      continue;
    }
    for (const auto& [other, other_docs] : by_query) {
      if (other == query) continue;
      for (const auto& [doc, g] : other_docs) {
        if (g > 0 && doc != sampled && !pool.judgments.contains(doc)) pool.judgments[doc] = 0;
      }
    }
    out.source_query[sampled] = query;
    out.pools.push_back(std::move(pool));
  }
  return out;
}

std::vector<GoldPool> read_gold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open gold file " + path.string());
  std::vector<GoldPool> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      GoldPool pool;
      pool.query_id = j.at("query_id").get<std::string>();
      pool.judgments = j.at("judgments").get<std::map<std::string, int>>();
      for (const auto& [doc, g] : pool.judgments) {
        if (g < 0) throw FormatError("negative grade for '" + doc + "'");
      }
      out.push_back(std::move(pool));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_gold(const std::vector<GoldPool>& pools, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& p : pools) out << json{{"query_id", p.query_id}, {"judgments", p.judgments}}.dump() << '\n';
}

}  // namespace facetsim::eval
