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

#include "facetsim/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "facetsim/errors.hpp"

namespace facetsim::retrieval {

using nlohmann::json;

namespace {

double squared_distance(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                        const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  return (a - b).squaredNorm();
}

std::size_t nearest_centroid(const Eigen::Ref<const Eigen::RowVectorXd>& row, const Matrix& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d = squared_distance(row, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(c);
    }
  }
  return best;
}

}  // namespace

void SentenceIndex::load(const Corpus& corpus) {
  if (corpus.empty()) throw InvalidInput("cannot index an empty corpus");
  const auto dim = corpus.begin()->second.vectors.cols();
  std::size_t total = 0;
  for (const auto& [id, doc] : corpus) {
    embeddings::validate(doc);
    if (doc.vectors.cols() != dim) throw InvalidInput("mixed embedding dimensions in corpus");
    total += doc.rows();
  }
  vectors_.resize(static_cast<Eigen::Index>(total), dim);
  Eigen::Index row = 0;
  for (const auto& [id, doc] : corpus) {
    const std::size_t doc_index = docs_.size();
    doc_ids_.push_back(id);
    docs_.push_back(doc);
    docs_.back().doc_id = id;
    for (Eigen::Index r = 0; r < doc.vectors.rows(); ++r, ++row) {
      vectors_.row(row) = doc.vectors.row(r);
      owners_.push_back({doc_index, static_cast<std::size_t>(r)});
    }
  }
}

void SentenceIndex::assign_rows() {
  assignment_.assign(rows(), 0);
  lists_.assign(static_cast<std::size_t>(centroids_.rows()), {});
  for (std::size_t r = 0; r < rows(); ++r) {
    assignment_[r] = nearest_centroid(vectors_.row(static_cast<Eigen::Index>(r)), centroids_);
    lists_[assignment_[r]].push_back(r);
  }
}

SentenceIndex SentenceIndex::build(const Corpus& corpus, IndexMode mode, std::size_t centroids,
                                   std::uint64_t seed) {
  SentenceIndex index;
  index.mode_ = mode;
  index.load(corpus);
  if (mode == IndexMode::kExact) {
    index.centroids_ = Matrix(0, index.vectors_.cols());
    index.lists_.assign(1, std::vector<std::size_t>(index.rows()));
    std::iota(index.lists_[0].begin(), index.lists_[0].end(), 0);
    index.assignment_.assign(index.rows(), 0);
    return index;
  }
  if (centroids == 0) throw InvalidInput("coarse index needs at least one centroid");
  if (centroids > index.rows()) throw InvalidInput("more centroids than indexed rows");

  // Seeded choice of distinct starting rows (partial Fisher-Yates).
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pick(index.rows());
  std::iota(pick.begin(), pick.end(), 0);
  for (std::size_t i = 0; i < centroids; ++i) {
    const std::size_t span = pick.size() - i;
    std::swap(pick[i], pick[i + static_cast<std::size_t>(rng() % span)]);
  }
  index.centroids_.resize(static_cast<Eigen::Index>(centroids), index.vectors_.cols());
  for (std::size_t c = 0; c < centroids; ++c) {
    index.centroids_.row(static_cast<Eigen::Index>(c)) = index.vectors_.row(static_cast<Eigen::Index>(pick[c]));
  }
  for (int it = 0; it < kKMeansIterations; ++it) {
    index.assign_rows();
    for (std::size_t c = 0; c < centroids; ++c) {
      const auto& members = index.lists_[c];
      if (members.empty()) continue;  // empty cluster keeps its centroid
      Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(index.vectors_.cols());
      for (auto r : members) sum += index.vectors_.row(static_cast<Eigen::Index>(r));
      index.centroids_.row(static_cast<Eigen::Index>(c)) = sum / static_cast<double>(members.size());
    }
  }
  index.assign_rows();
  return index;
}

SentenceIndex SentenceIndex::with_centroids(const Corpus& corpus, const Matrix& centroids) {
  SentenceIndex index;
  index.mode_ = IndexMode::kCoarse;
  index.load(corpus);
  if (centroids.rows() == 0 || centroids.cols() != index.vectors_.cols()) {
    throw InvalidInput("centroid matrix does not match corpus dimension");
  }
  index.centroids_ = centroids;
  index.assign_rows();
  return index;
}

std::vector<std::pair<double, std::size_t>> SentenceIndex::probe(
    const Eigen::Ref<const Eigen::RowVectorXd>& query, std::size_t limit, std::size_t min_docs,
    std::size_t nprobe) const {
  std::vector<std::size_t> scan_lists;
  if (mode_ == IndexMode::kExact || nprobe >= lists_.size()) {
    scan_lists.resize(lists_.size());
    std::iota(scan_lists.begin(), scan_lists.end(), 0);
  } else {
    std::vector<std::pair<double, std::size_t>> order;
    for (Eigen::Index c = 0; c < centroids_.rows(); ++c) {
      order.emplace_back(squared_distance(query, centroids_.row(c)), static_cast<std::size_t>(c));
    }
    std::sort(order.begin(), order.end());
    for (std::size_t k = 0; k < std::max<std::size_t>(nprobe, 1); ++k) scan_lists.push_back(order[k].second);
  }

  std::vector<std::pair<double, std::size_t>> hits;
  for (auto list : scan_lists) {
    for (auto r : lists_[list]) {
      hits.emplace_back(ot::l2_distance(query, vectors_.row(static_cast<Eigen::Index>(r))), r);
    }
  }
  std::sort(hits.begin(), hits.end());
  std::set<std::size_t> docs;
  std::size_t keep = 0;
  while (keep < hits.size() && (keep < limit || docs.size() < min_docs)) {
    docs.insert(owners_[hits[keep].second].doc);
    ++keep;
  }
  // Hits tied with the last kept one stay, so the cut never splits a tie.
  while (keep > 0 && keep < hits.size() && hits[keep].first == hits[keep - 1].first) ++keep;
  hits.resize(keep);
  return hits;
}

void sort_ranking(std::vector<RankedEntry>& entries) {
  std::sort(entries.begin(), entries.end(), [](const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.doc_id < b.doc_id;
  });
}

namespace {

void check_query(const SentenceMatrix& query, const SentenceIndex& index, std::size_t k) {
  if (k == 0) throw InvalidInput("k must be >= 1");
  embeddings::validate(query);
  if (query.dim() != index.dim()) throw InvalidInput("query dimension does not match index");
}

// Per-document minimum over probe hits of the selected query rows.
std::vector<RankedEntry> single_match(const SentenceMatrix& query, const std::vector<std::size_t>& rows,
                                      const SentenceIndex& index, std::size_t needed,
                                      const SearchParams& params) {
  std::vector<double> best(index.doc_ids().size(), std::numeric_limits<double>::infinity());
  for (auto r : rows) {
    const auto hits = index.probe(query.vectors.row(static_cast<Eigen::Index>(r)), params.probe_rows, needed,
                                  params.nprobe);
    for (const auto& [dist, row] : hits) {
      auto& slot = best[index.owners()[row].doc];
      slot = std::min(slot, dist);
    }
  }
  std::vector<RankedEntry> out;
  for (std::size_t d = 0; d < best.size(); ++d) {
    if (std::isfinite(best[d])) out.push_back({index.doc_ids()[d], best[d]});
  }
  sort_ranking(out);
  return out;
}

RankedList search(const SentenceMatrix& query, const std::optional<AspectSelection>& sel,
                  const SentenceIndex& index, ScoreKind kind, std::size_t k, const SearchParams& params) {
  check_query(query, index, k);
  const auto sel_all = AspectSelection::all(query.rows());
  const AspectSelection& rows = sel ? *sel : sel_all;
  if (rows.indices().back() >= query.rows()) throw InvalidInput("aspect index out of range");

  RankedList out;
  out.query_id = query.doc_id;
  const std::size_t ndocs = index.doc_ids().size();

  if (kind == ScoreKind::kSingle) {
    out.entries = single_match(query, rows.indices(), index, k, params);
  } else {
    std::size_t shortlist = params.shortlist;
    if (shortlist == 0) {
      shortlist = index.mode() == IndexMode::kExact ? ndocs : std::max<std::size_t>(4 * k, 100);
    }
    std::vector<std::size_t> candidates;
    if (index.mode() == IndexMode::kExact && shortlist >= ndocs) {
      candidates.resize(ndocs);
      std::iota(candidates.begin(), candidates.end(), 0);
    } else {
      auto first_stage = single_match(query, rows.indices(), index, shortlist, params);
      if (first_stage.size() > shortlist) first_stage.resize(shortlist);
      const auto& ids = index.doc_ids();
      for (const auto& e : first_stage) {
        candidates.push_back(static_cast<std::size_t>(
            std::lower_bound(ids.begin(), ids.end(), e.doc_id) - ids.begin()));
      }
    }
    for (auto c : candidates) {
      const auto& doc = index.documents()[c];
      const auto d = similarity::restrict(ot::pairwise_l2(query.vectors, doc.vectors), rows);
      out.entries.push_back({doc.doc_id, similarity::score(d, kind, params.score)});
    }
    sort_ranking(out.entries);
  }
  if (out.entries.size() > k) out.entries.resize(k);
  return out;
}

}  // namespace

RankedList search_whole(const SentenceMatrix& query, const SentenceIndex& index, ScoreKind kind,
                        std::size_t k, const SearchParams& params) {
  return search(query, std::nullopt, index, kind, k, params);
}

RankedList search_aspect(const SentenceMatrix& query, const AspectSelection& sel,
                         const SentenceIndex& index, ScoreKind kind, std::size_t k,
                         const SearchParams& params) {
  return search(query, sel, index, kind, k, params);
}

RankedList rank_pool(const SentenceMatrix& query, const std::vector<SentenceMatrix>& pool,
                     ScoreKind kind, const similarity::ScoreParams& params,
                     const std::optional<AspectSelection>& sel) {
  if (pool.empty()) throw InvalidInput("rank_pool: empty pool");
  embeddings::validate(query);
  RankedList out;
  out.query_id = query.doc_id;
  std::set<std::string> seen;
  for (const auto& member : pool) {
    if (!seen.insert(member.doc_id).second) {
      throw InvalidInput("rank_pool: duplicate doc id '" + member.doc_id + "'");
    }
    auto d = ot::pairwise_l2(query.vectors, member.vectors);
    if (sel) d = similarity::restrict(d, *sel);
    out.entries.push_back({member.doc_id, similarity::score(d, kind, params)});
  }
  sort_ranking(out.entries);
  return out;
}

void write_rankings(const std::vector<RankedList>& lists, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& list : lists) {
    json ranking = json::array();
    for (const auto& e : list.entries) ranking.push_back({{"doc_id", e.doc_id}, {"score", e.score}});
    out << json{{"query_id", list.query_id}, {"ranking", ranking}}.dump() << '\n';
  }
}

std::vector<RankedList> read_rankings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open rankings " + path.string());
  std::vector<RankedList> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      RankedList list;
      list.query_id = j.at("query_id").get<std::string>();
      for (const auto& e : j.at("ranking")) {
        list.entries.push_back({e.at("doc_id").get<std::string>(), e.at("score").get<double>()});
      }
      out.push_back(std::move(list));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace facetsim::retrieval
