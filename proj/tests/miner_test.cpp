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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <unistd.h>

#include "facetsim/errors.hpp"

namespace facetsim::miner {
namespace {

const std::filesystem::path kData = FACETSIM_TEST_DATA;

std::string words(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " w" : "W") + std::to_string(i);
  return s + ".";
}

PaperRecord paper(std::string id, std::vector<std::size_t> lengths) {
  PaperRecord p;
  p.paper_id = std::move(id);
  for (auto n : lengths) p.abstract_sentences.push_back(words(n));
  return p;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / (name + "." + std::to_string(::getpid()));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Filter, SentenceCountBounds) {
  EXPECT_EQ(filter_abstract(paper("a", {7, 7})).reason, RejectReason::kTooFewSentences);
  EXPECT_TRUE(filter_abstract(paper("a", {7, 7, 7})).accepted);
  EXPECT_TRUE(filter_abstract(paper("a", std::vector<std::size_t>(20, 7))).accepted);
  EXPECT_EQ(filter_abstract(paper("a", std::vector<std::size_t>(21, 7))).reason,
            RejectReason::kTooManySentences);
}

TEST(Filter, SentenceLengthRules) {
  EXPECT_EQ(filter_abstract(paper("a", {7, 7, 81, 7, 7})).reason, RejectReason::kLongSentence);
  EXPECT_TRUE(filter_abstract(paper("a", {7, 80, 7})).accepted);
  EXPECT_EQ(filter_abstract(paper("a", {3, 2, 1})).reason, RejectReason::kAllShort);
  EXPECT_TRUE(filter_abstract(paper("a", {3, 4, 1})).accepted);
}

TEST(Filter, DomainTag) {
  auto p = paper("a", {7, 7, 7});
  FilterRules rules;
  rules.domain = "biomed";
  EXPECT_EQ(filter_abstract(p, rules).reason, RejectReason::kDomain);
  p.domain = "biomed";
  EXPECT_TRUE(filter_abstract(p, rules).accepted);
}

TEST(Text, TokensAndSentences) {
  EXPECT_EQ(count_tokens("  a  b\tc\n"), 3u);
  EXPECT_EQ(count_tokens(""), 0u);
  EXPECT_EQ(split_sentences("First one here. Second? yes. Third! Done"),
            (std::vector<std::string>{"First one here.", "Second? yes.", "Third!", "Done"}));
}

TEST(Pairs, GroupOfThreeGivesSixOrderedPairs) {
  const auto pairs = ordered_pairs({"A", "B", "C"});
  const std::vector<std::pair<std::string, std::string>> expected{
      {"A", "B"}, {"B", "A"}, {"A", "C"}, {"C", "A"}, {"B", "C"}, {"C", "B"}};
  EXPECT_EQ(pairs, expected);
  EXPECT_EQ(ordered_pairs({"A", "B"}).size(), 2u);
}

TEST(Cocitations, GroupingRules) {
  std::vector<PaperRecord> corpus;
  for (auto id : {"A", "B", "C", "D", "E"}) corpus.push_back(paper(id, {7, 7, 7}));
  auto cite = [](std::string s, std::vector<std::string> ids) {
    return CitationContext{std::move(s), std::move(ids), 0};
  };
  corpus[4].body_citations = {cite("four", {"A", "B", "C", "D"}), cite("ab1", {"A", "B"}),
                              cite("ab2", {"A", "B"}), cite("solo", {"A"}), cite("ghost", {"C", "Z"})};
  const auto groups = extract_cocitations(corpus);
  ASSERT_EQ(groups.triple_groups.size(), 1u);
  EXPECT_EQ(groups.triple_groups.begin()->second, (std::vector<std::string>{"ab1", "ab2"}));
  EXPECT_EQ(groups.paraphrase_sets.size(), 1u);
  EXPECT_DOUBLE_EQ(groups.multi_context_fraction, 1.0);
}

TEST(Cocitations, DuplicateIdsRejected) {
  std::vector<PaperRecord> corpus{paper("A", {7, 7, 7}), paper("A", {7, 7, 7})};
  EXPECT_THROW(extract_cocitations(corpus), DataError);
}

TEST(Fixture, AcceptedAndRejectedSetsMatchHandEnumeration) {
  const auto groups = extract_cocitations(read_corpus(kData / "mining_fixture.jsonl"));
  EXPECT_EQ(groups.accepted_ids, (std::vector<std::string>{"C1", "P1", "P2", "P3", "P4", "P5"}));
  const std::map<std::string, RejectReason> rejected{{"R_few", RejectReason::kTooFewSentences},
                                                     {"R_long", RejectReason::kLongSentence},
                                                     {"R_many", RejectReason::kTooManySentences},
                                                     {"R_short", RejectReason::kAllShort}};
  EXPECT_EQ(groups.rejected, rejected);

  std::set<PaperSet> sets;
  for (const auto& [set, ctx] : groups.triple_groups) sets.insert(set);
  const std::set<PaperSet> expected{{"P1", "P2"}, {"P1", "P2", "P3"}, {"P2", "P3"}, {"P4", "P5"}};
  EXPECT_EQ(sets, expected);
  EXPECT_EQ(groups.triple_groups.at({"P1", "P2"}).size(), 2u);
  EXPECT_DOUBLE_EQ(groups.multi_context_fraction, 0.25);
  ASSERT_EQ(groups.paraphrase_sets.size(), 1u);
  EXPECT_EQ(groups.paraphrase_sets.begin()->first, (PaperSet{"P1", "P2"}));
}

TEST(Fixture, TriplesRespectGroups) {
  const auto groups = extract_cocitations(read_corpus(kData / "mining_fixture.jsonl"));
  const auto triples = build_triples(groups, 0, 42);
  ASSERT_EQ(triples.size(), 12u);
  const std::set<std::string> accepted(groups.accepted_ids.begin(), groups.accepted_ids.end());
  for (const auto& t : triples) {
    EXPECT_TRUE(accepted.contains(t.anchor_id));
    EXPECT_TRUE(accepted.contains(t.positive_id));
    EXPECT_TRUE(accepted.contains(t.negative_id));
    EXPECT_NE(t.anchor_id, t.positive_id);
    EXPECT_FALSE(t.contexts.empty());
    // The negative lies outside the co-cited set the pair came from.
    bool found = false;
    for (const auto& [set, ctx] : groups.triple_groups) {
      if (ctx != t.contexts) continue;
      found = true;
      EXPECT_FALSE(std::binary_search(set.begin(), set.end(), t.negative_id));
    }
    EXPECT_TRUE(found);
  }
}

TEST(Fixture, DownsamplingAndDeterminism) {
  const auto groups = extract_cocitations(read_corpus(kData / "mining_fixture.jsonl"));
  const auto a = build_triples(groups, 10, 9);
  EXPECT_EQ(a.size(), 10u);
  const auto path_a = temp_path("triples_a.jsonl");
  const auto path_b = temp_path("triples_b.jsonl");
  write_triples(a, path_a);
  write_triples(build_triples(groups, 10, 9), path_b);
  EXPECT_EQ(slurp(path_a), slurp(path_b));
  const auto back = read_triples(path_a);
  ASSERT_EQ(back.size(), a.size());
  EXPECT_EQ(back[3].negative_id, a[3].negative_id);
  EXPECT_EQ(back[3].contexts, a[3].contexts);
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST(Triples, TooFewAcceptedPapers) {
  CoCitations groups;
  groups.accepted_ids = {"A", "B", "C"};
  EXPECT_THROW(build_triples(groups, 0, 1), DataError);
}

TEST(Records, ParsingAndErrors) {
  const auto rec = parse_record(
      R"({"paper_id":"x","title":"t","abstract":"One two three four. Five six seven eight.",)"
      R"("citations":[{"sentence":"s","cited_ids":["b","a","b"]}]})");
  EXPECT_EQ(rec.abstract_sentences.size(), 2u);
  EXPECT_EQ(rec.body_citations.at(0).cited_ids, (std::vector<std::string>{"a", "b"}));
  EXPECT_THROW(parse_record(R"({"title":"no id"})"), FormatError);
  EXPECT_THROW(parse_record("{not json"), FormatError);
}

}  // namespace
}  // namespace facetsim::miner
