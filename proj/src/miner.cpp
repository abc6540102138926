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

#include "facetsim/miner.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "facetsim/errors.hpp"

namespace facetsim::miner {

using nlohmann::json;

namespace {

// Portable uniform draw in [0, n); std::uniform_int_distribution differs
// across standard libraries.
std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

std::vector<std::string> normalize_ids(std::vector<std::string> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kNone: return "accepted";
    case RejectReason::kTooFewSentences: return "too-few-sentences";
    case RejectReason::kTooManySentences: return "too-many-sentences";
    case RejectReason::kLongSentence: return "long-sentence";
    case RejectReason::kAllShort: return "all-short";
    case RejectReason::kDomain: return "domain";
  }
  return "?";
}

std::size_t count_tokens(std::string_view sentence) {
  std::size_t count = 0;
  bool in_token = false;
  for (unsigned char c : sentence) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_token) ++count;
    in_token = !space;
  }
  return count;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    const char c = text[i];
    if ((c == '.' || c == '?' || c == '!') && text[i + 1] == ' ' &&
        std::isupper(static_cast<unsigned char>(text[i + 2]))) {
      out.emplace_back(text.substr(start, i + 1 - start));
      start = i + 2;
    }
  }
  if (start < text.size()) out.emplace_back(text.substr(start));
  // Drop whitespace-only fragments.
  std::erase_if(out, [](const std::string& s) { return count_tokens(s) == 0; });
  return out;
}

FilterVerdict filter_abstract(const PaperRecord& paper, const FilterRules& rules) {
  if (rules.domain && paper.domain != rules.domain) return {false, RejectReason::kDomain};
  const auto& sents = paper.abstract_sentences;
  if (sents.size() < rules.min_sentences) return {false, RejectReason::kTooFewSentences};
  if (sents.size() > rules.max_sentences) return {false, RejectReason::kTooManySentences};
  bool all_short = true;
  for (const auto& s : sents) {
    const auto tokens = count_tokens(s);
    if (tokens > rules.long_tokens) return {false, RejectReason::kLongSentence};
    if (tokens > rules.short_tokens) all_short = false;
  }
  if (all_short) return {false, RejectReason::kAllShort};
  return {true, RejectReason::kNone};
}

CoCitations extract_cocitations(const std::vector<PaperRecord>& corpus, const FilterRules& rules) {
  CoCitations out;
  std::set<std::string> accepted;
  std::set<std::string> seen;
  for (const auto& paper : corpus) {
    if (!seen.insert(paper.paper_id).second) {
      throw DataError("duplicate paper_id '" + paper.paper_id + "'");
    }
    const auto verdict = filter_abstract(paper, rules);
    if (verdict.accepted) {
      accepted.insert(paper.paper_id);
    } else {
      out.rejected.emplace(paper.paper_id, verdict.reason);
    }
  }
  out.accepted_ids.assign(accepted.begin(), accepted.end());

  ContextGroups all_sets;
  for (const auto& paper : corpus) {
    for (const auto& ctx : paper.body_citations) {
      PaperSet resolved;
      for (const auto& id : ctx.cited_ids) {
        if (accepted.contains(id)) resolved.push_back(id);
      }
      resolved = normalize_ids(std::move(resolved));
      if (resolved.size() < 2) continue;
      all_sets[resolved].push_back(ctx.sentence);
      if (resolved.size() <= 3) out.triple_groups[resolved].push_back(ctx.sentence);
    }
  }
  for (auto& [set, contexts] : all_sets) {
    if (contexts.size() >= 2) out.paraphrase_sets.emplace(set, std::move(contexts));
  }
  if (!out.triple_groups.empty()) {
    const auto multi = std::count_if(out.triple_groups.begin(), out.triple_groups.end(),
                                     [](const auto& g) { return g.second.size() >= 2; });
    out.multi_context_fraction =
        static_cast<double>(multi) / static_cast<double>(out.triple_groups.size());
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> ordered_pairs(const PaperSet& set) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) {
      pairs.emplace_back(set[i], set[j]);
      pairs.emplace_back(set[j], set[i]);
    }
  }
  return pairs;
}

std::vector<Triple> build_triples(const CoCitations& groups, std::size_t count, std::uint64_t seed) {
  if (groups.accepted_ids.size() < 4) {
    throw DataError("need at least 4 accepted papers to sample negatives");
  }
  std::mt19937_64 rng(seed);
  std::vector<Triple> triples;
  for (const auto& [set, contexts] : groups.triple_groups) {
    std::vector<std::string> pool;
    std::set_difference(groups.accepted_ids.begin(), groups.accepted_ids.end(), set.begin(),
                        set.end(), std::back_inserter(pool));
    if (pool.empty()) continue;
    for (auto& [anchor, positive] : ordered_pairs(set)) {
      triples.push_back({std::move(anchor), std::move(positive), pool[uniform_index(rng, pool.size())],
                         contexts});
    }
  }
  if (count == 0 || triples.size() <= count) return triples;

  // Uniform subset of size `count` (partial Fisher-Yates), kept in emission order.
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(order[i], order[i + uniform_index(rng, order.size() - i)]);
  }
  order.resize(count);
  std::sort(order.begin(), order.end());
  std::vector<Triple> sampled;
  sampled.reserve(count);
  for (auto idx : order) sampled.push_back(std::move(triples[idx]));
  return sampled;
}

PaperRecord parse_record(std::string_view json_line) {
  PaperRecord rec;
  try {
    const json j = json::parse(json_line);
    rec.paper_id = j.at("paper_id").get<std::string>();
    rec.title = j.value("title", std::string{});
    const auto& abs = j.at("abstract");
    if (abs.is_string()) {
      rec.abstract_sentences = split_sentences(abs.get<std::string>());
    } else {
      rec.abstract_sentences = abs.get<std::vector<std::string>>();
    }
    if (j.contains("domain") && !j["domain"].is_null()) rec.domain = j["domain"].get<std::string>();
    for (const auto& c : j.value("citations", json::array())) {
      CitationContext ctx;
      ctx.sentence = c.at("sentence").get<std::string>();
      ctx.cited_ids = normalize_ids(c.at("cited_ids").get<std::vector<std::string>>());
      ctx.token_count = count_tokens(ctx.sentence);
      if (ctx.cited_ids.empty()) continue;
      rec.body_citations.push_back(std::move(ctx));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad corpus record: ") + e.what());
  }
  return rec;
}

std::vector<PaperRecord> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus " + path.string());
  std::vector<PaperRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_record(line));
    } catch (const FormatError& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

void write_triples(const std::vector<Triple>& triples, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  for (const auto& t : triples) {
    json j = {{"anchor", t.anchor_id},
              {"positive", t.positive_id},
              {"negative", t.negative_id},
              {"contexts", t.contexts}};
    out << j.dump() << '\n';
  }
}

std::vector<Triple> read_triples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open triples " + path.string());
  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("anchor").get<std::string>(), j.at("positive").get<std::string>(),
                     j.at("negative").get<std::string>(),
                     j.value("contexts", std::vector<std::string>{})});
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace facetsim::miner
