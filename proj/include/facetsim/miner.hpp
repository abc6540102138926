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
#include <string_view>
#include <vector>

namespace facetsim::miner {

struct CitationContext {
  std::string sentence;
  std::vector<std::string> cited_ids;  // sorted, unique, nonempty
  std::size_t token_count = 0;
};

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::vector<std::string> abstract_sentences;
  std::vector<CitationContext> body_citations;
  std::optional<std::string> domain;
};

struct Triple {
  std::string anchor_id;
  std::string positive_id;
  std::string negative_id;
  std::vector<std::string> contexts;
};

enum class RejectReason { kNone, kTooFewSentences, kTooManySentences, kLongSentence, kAllShort, kDomain };

std::string_view to_string(RejectReason reason);

struct FilterRules {
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 20;
  std::size_t short_tokens = 3;   // a sentence with <= this many tokens is "short"
  std::size_t long_tokens = 80;   // a sentence with > this many tokens rejects the abstract
  std::optional<std::string> domain;  // keep only records carrying this tag
};

struct FilterVerdict {
  bool accepted = false;
  RejectReason reason = RejectReason::kNone;
};

// Whitespace-delimited token count.
std::size_t count_tokens(std::string_view sentence);

// Splits on ". ", "? " or "! " when the next character is uppercase.
std::vector<std::string> split_sentences(std::string_view text);

FilterVerdict filter_abstract(const PaperRecord& paper, const FilterRules& rules = {});

using PaperSet = std::vector<std::string>;  // sorted, unique ids
using ContextGroups = std::map<PaperSet, std::vector<std::string>>;

struct CoCitations {
  // Sets of 2-3 accepted papers with the contexts that co-cite exactly them.
  ContextGroups triple_groups;
  // Sets of >= 2 accepted papers cited together in >= 2 contexts.
  ContextGroups paraphrase_sets;
  std::vector<std::string> accepted_ids;  // sorted
  std::map<std::string, RejectReason> rejected;
  // Fraction of triple groups backed by more than one context.
  double multi_context_fraction = 0.0;
};

CoCitations extract_cocitations(const std::vector<PaperRecord>& corpus, const FilterRules& rules = {});

// Ordered anchor/positive pairs for a group: (a,b),(b,a) for each a<b.
std::vector<std::pair<std::string, std::string>> ordered_pairs(const PaperSet& set);

// Emits every ordered pair of every group with a uniformly drawn negative
// from accepted papers outside the group, then downsamples to `count`
// (0 keeps all). Throws DataError with fewer than 4 accepted papers.
std::vector<Triple> build_triples(const CoCitations& groups, std::size_t count, std::uint64_t seed);

// JSON lines I/O. Parse problems throw FormatError.
std::vector<PaperRecord> read_corpus(const std::filesystem::path& path);
PaperRecord parse_record(std::string_view json_line);
void write_triples(const std::vector<Triple>& triples, const std::filesystem::path& path);
std::vector<Triple> read_triples(const std::filesystem::path& path);

}  // namespace facetsim::miner
