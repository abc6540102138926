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
#include <optional>
#include <string>
#include <vector>

#include "facetsim/embeddings.hpp"
#include "facetsim/similarity.hpp"

namespace facetsim::retrieval {

using embeddings::Corpus;
using embeddings::SentenceMatrix;
using similarity::AspectSelection;
using similarity::ScoreKind;

struct RankedEntry {
  std::string doc_id;
  double score = 0.0;  // distance, lower is closer
};

struct RankedList {
  std::string query_id;
  std::vector<RankedEntry> entries;
};

enum class IndexMode { kExact, kCoarse };

struct RowOwner {
  std::size_t doc = 0;       // position in SentenceIndex::doc_ids()
  std::size_t sentence = 0;  // row inside that document
};

struct SearchParams {
  similarity::ScoreParams score{};
  // Rows fetched per query sentence probe.
  std::size_t probe_rows = 50;
  // Coarse mode: inverted lists scanned per probe.
  std::size_t nprobe = 3;
  // Candidates re-scored by OT/attention. 0 means every document in exact
  // mode and max(4k, 100) in coarse mode.
  std::size_t shortlist = 0;
};

// Flat store of every sentence row in a corpus. Immutable once built.
class SentenceIndex {
 public:
  static constexpr int kKMeansIterations = 20;

  // Coarse mode clusters rows with seeded k-means into `centroids` lists.
  static SentenceIndex build(const Corpus& corpus, IndexMode mode, std::size_t centroids = 1,
                             std::uint64_t seed = 0);
  // Coarse index from known centroids (rows go to the nearest one).
  static SentenceIndex with_centroids(const Corpus& corpus, const Matrix& centroids);

  IndexMode mode() const { return mode_; }
  std::size_t rows() const { return owners_.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors_.cols()); }
  const std::vector<RowOwner>& owners() const { return owners_; }
  const std::vector<std::string>& doc_ids() const { return doc_ids_; }
  const std::vector<SentenceMatrix>& documents() const { return docs_; }
  const Matrix& centroids() const { return centroids_; }
  const std::vector<std::size_t>& assignment() const { return assignment_; }

  // Up to `limit` rows nearest to `query`, extended until at least
  // `min_docs` distinct documents appear and past any tie at the cut.
  // Sorted by (distance, row).
  std::vector<std::pair<double, std::size_t>> probe(const Eigen::Ref<const Eigen::RowVectorXd>& query,
                                                    std::size_t limit, std::size_t min_docs,
                                                    std::size_t nprobe) const;

 private:
  SentenceIndex() = default;
  void load(const Corpus& corpus);
  void assign_rows();

  IndexMode mode_ = IndexMode::kExact;
  Matrix vectors_;  // one row per corpus sentence
  std::vector<RowOwner> owners_;
  std::vector<std::string> doc_ids_;
  std::vector<SentenceMatrix> docs_;
  Matrix centroids_;
  std::vector<std::size_t> assignment_;            // row -> list
  std::vector<std::vector<std::size_t>> lists_;    // list -> rows
};

RankedList search_whole(const SentenceMatrix& query, const SentenceIndex& index, ScoreKind kind,
                        std::size_t k, const SearchParams& params = {});

// Like search_whole, but only the selected query sentences contribute
// distances (rows of D restricted to the selection).
RankedList search_aspect(const SentenceMatrix& query, const AspectSelection& sel,
                         const SentenceIndex& index, ScoreKind kind, std::size_t k,
                         const SearchParams& params = {});

// Scores every pool member, ascending; ties by doc_id.
RankedList rank_pool(const SentenceMatrix& query, const std::vector<SentenceMatrix>& pool,
                     ScoreKind kind, const similarity::ScoreParams& params,
                     const std::optional<AspectSelection>& sel = std::nullopt);

void sort_ranking(std::vector<RankedEntry>& entries);

void write_rankings(const std::vector<RankedList>& lists, const std::filesystem::path& path);
std::vector<RankedList> read_rankings(const std::filesystem::path& path);

}  // namespace facetsim::retrieval
