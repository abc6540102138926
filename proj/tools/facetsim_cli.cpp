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

// Command-line front end: mine -> encode -> train -> index -> search -> eval.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "facetsim/embeddings.hpp"
#include "facetsim/errors.hpp"
#include "facetsim/eval.hpp"
#include "facetsim/manifest.hpp"
#include "facetsim/miner.hpp"
#include "facetsim/retrieval.hpp"
#include "facetsim/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace facetsim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitInput = 2;

// Thrown after listing every validation problem.
struct UsageProblems {
  std::vector<std::string> problems;
};

class Checks {
 public:
  void input(const std::string& path, const char* flag) {
    if (path.empty()) {
      problems_.push_back(std::string(flag) + " is required");
    } else if (!fs::exists(path)) {
      problems_.push_back(std::string(flag) + ": no such file '" + path + "'");
    }
  }
  void output(const std::string& path, const char* flag) {
    if (path.empty()) {
      problems_.push_back(std::string(flag) + " is required");
      return;
    }
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) {
      problems_.push_back(std::string(flag) + ": directory '" + parent.string() + "' does not exist");
    }
  }
  void require(bool ok, std::string message) {
    if (!ok) problems_.push_back(std::move(message));
  }
  void done() const {
    if (!problems_.empty()) throw UsageProblems{problems_};
  }

 private:
  std::vector<std::string> problems_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

std::vector<std::size_t> parse_indices(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t pos = 0;
    const auto v = std::stoull(item, &pos);
    if (pos != item.size()) throw InvalidInput("bad aspect index '" + item + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

// ---- mine ----------------------------------------------------------------

struct MineArgs {
  std::string corpus, out;
  std::size_t count = 0;
  std::uint64_t seed = 0;
  std::string domain;
};

int run_mine(const MineArgs& a) {
  Checks checks;
  checks.input(a.corpus, "--corpus");
  checks.output(a.out, "--out");
  checks.done();

  RunManifest manifest;
  manifest.command = "mine";
  manifest.seed = a.seed;
  manifest.config = json{{"count", a.count}, {"seed", a.seed}, {"domain", a.domain}}.dump();
  manifest.add_input(a.corpus);

  miner::FilterRules rules;
  if (!a.domain.empty()) rules.domain = a.domain;
  std::vector<miner::Triple> triples;
  json stats;
  {
    StageTimer timer(manifest, "mine");
    const auto corpus = miner::read_corpus(a.corpus);
    const auto groups = miner::extract_cocitations(corpus, rules);
    triples = miner::build_triples(groups, a.count, a.seed);
    json rejected = json::object();
    for (const auto& [id, reason] : groups.rejected) rejected[id] = miner::to_string(reason);
    std::size_t available = 0;
    for (const auto& [set, ctx] : groups.triple_groups) available += set.size() * (set.size() - 1);
    stats = {{"records", corpus.size()},
             {"accepted", groups.accepted_ids.size()},
             {"rejected", rejected},
             {"groups", groups.triple_groups.size()},
             {"paraphrase_sets", groups.paraphrase_sets.size()},
             {"multi_context_fraction", groups.multi_context_fraction},
             {"pairs_available", available},
             {"triples", triples.size()}};
  }
  miner::write_triples(triples, a.out);
  write_text(a.out + ".stats.json", stats.dump(2) + "\n");
  manifest.add_output(a.out);
  manifest.write(a.out);
  std::cout << stats.dump() << '\n';
  return kExitOk;
}

// ---- encode --------------------------------------------------------------

struct EncodeArgs {
  std::string corpus, out;
  std::size_t dim = 64;
  std::uint64_t seed = 0;
  bool with_title = false;
};

int run_encode(const EncodeArgs& a) {
  Checks checks;
  checks.input(a.corpus, "--corpus");
  checks.output(a.out, "--out");
  checks.require(a.dim >= 2, "--dim must be >= 2");
  checks.done();

  RunManifest manifest;
  manifest.command = "encode";
  manifest.seed = a.seed;
  manifest.config = json{{"dim", a.dim}, {"seed", a.seed}, {"with_title", a.with_title}}.dump();
  manifest.add_input(a.corpus);
  embeddings::Corpus out;
  {
    StageTimer timer(manifest, "encode");
    for (const auto& rec : miner::read_corpus(a.corpus)) {
      std::vector<std::string> sentences;
      if (a.with_title && !rec.title.empty()) sentences.push_back(rec.title);
      for (const auto& s : rec.abstract_sentences) {
        if (!s.empty()) sentences.push_back(s);
      }
      if (sentences.empty()) {
        std::cerr << "warning: '" << rec.paper_id << "' has no sentences; skipped\n";
        continue;
      }
      out.emplace(rec.paper_id, embeddings::stub_encode(sentences, a.dim, a.seed, rec.paper_id));
    }
  }
  embeddings::write_embeddings(out, a.out);
  manifest.add_output(a.out);
  manifest.write(a.out);
  std::cout << json{{"documents", out.size()}, {"dim", a.dim}}.dump() << '\n';
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string triples, embeddings, aux, config, out;
  std::uint64_t aux_seed = 0;
  std::string objective;
  std::optional<double> lambda, tau, margin, lr, holdout;
  std::optional<int> epochs, batch_size, warmup, threads;
  std::optional<std::uint64_t> seed;
};

int run_train(const TrainArgs& a) {
  Checks checks;
  checks.input(a.triples, "--triples");
  checks.input(a.embeddings, "--embeddings");
  checks.input(a.aux, "--aux-embeddings");
  if (!a.config.empty()) checks.input(a.config, "--config");
  checks.output(a.out, "--out");
  checks.done();

  training::TrainConfig config;
  if (!a.config.empty()) config = training::read_config(a.config);
  if (!a.objective.empty()) config.objective = training::parse_objective(a.objective);
  if (a.lambda) config.lambda = *a.lambda;
  if (a.tau) config.tau = *a.tau;
  if (a.margin) config.margin = *a.margin;
  if (a.lr) config.learning_rate = *a.lr;
  if (a.holdout) config.holdout_fraction = *a.holdout;
  if (a.epochs) config.epochs = *a.epochs;
  if (a.batch_size) config.batch_size = *a.batch_size;
  if (a.warmup) config.warmup_steps = *a.warmup;
  if (a.threads) config.threads = *a.threads;
  if (a.seed) config.seed = *a.seed;
  if (auto errs = config.problems(); !errs.empty()) throw UsageProblems{errs};

  RunManifest manifest;
  manifest.command = "train";
  manifest.seed = config.seed;
  auto snapshot = json::parse(training::dump_config(config));
  snapshot["aux_seed"] = a.aux_seed;
  manifest.config = snapshot.dump();
  for (const auto& p : {a.triples, a.embeddings, a.aux}) manifest.add_input(p);
  if (!a.config.empty()) manifest.add_input(a.config);

  const auto triples = miner::read_triples(a.triples);
  const auto base = embeddings::read_embeddings(a.embeddings);
  const auto aux = embeddings::read_embeddings(a.aux);
  if (base.empty() || aux.empty()) throw DataError("embedding files must not be empty");
  const std::size_t aux_dim = aux.begin()->second.dim();
  const std::uint64_t aux_seed = a.aux_seed;
  training::TrainingData data{base, aux, [aux_dim, aux_seed](const std::vector<std::string>& ctx) {
                                return embeddings::stub_encode(ctx, aux_dim, aux_seed).vectors;
                              }};
  training::TrainResult result;
  {
    StageTimer timer(manifest, "train");
    result = training::train(triples, config, data);
  }
  embeddings::write_head(result.head, a.out);
  const json curve = {{"step_losses", result.step_losses},
                      {"holdout_losses", result.holdout_losses},
                      {"best_epoch", result.best_epoch}};
  write_text(a.out + ".losses.json", curve.dump(2) + "\n");
  manifest.add_output(a.out);
  manifest.add_output(a.out + ".losses.json");
  manifest.write(a.out);
  std::cout << json{{"steps", result.step_losses.size()},
                    {"best_epoch", result.best_epoch},
                    {"best_holdout_loss", result.holdout_losses[result.best_epoch]}}
                   .dump()
            << '\n';
  return kExitOk;
}

// ---- index ---------------------------------------------------------------

struct IndexArgs {
  std::string embeddings, head, out, mode = "exact";
  std::size_t centroids = 8;
  std::uint64_t seed = 0;
};

embeddings::Corpus load_corpus(const std::string& path, const std::string& head) {
  auto corpus = embeddings::read_embeddings(path);
  if (!head.empty()) corpus = embeddings::project(corpus, embeddings::read_head(head));
  return corpus;
}

int run_index(const IndexArgs& a) {
  Checks checks;
  checks.input(a.embeddings, "--embeddings");
  if (!a.head.empty()) checks.input(a.head, "--head");
  checks.output(a.out, "--out");
  checks.require(a.mode == "exact" || a.mode == "coarse", "--mode must be exact|coarse");
  checks.done();

  RunManifest manifest;
  manifest.command = "index";
  manifest.seed = a.seed;
  manifest.config = json{{"mode", a.mode}, {"centroids", a.centroids}, {"seed", a.seed}}.dump();
  manifest.add_input(a.embeddings);
  if (!a.head.empty()) manifest.add_input(a.head);

  const auto corpus = load_corpus(a.embeddings, a.head);
  const auto mode = a.mode == "exact" ? retrieval::IndexMode::kExact : retrieval::IndexMode::kCoarse;
  std::optional<retrieval::SentenceIndex> index;
  {
    StageTimer timer(manifest, "build");
    index.emplace(retrieval::SentenceIndex::build(corpus, mode, a.centroids, a.seed));
  }
  json centroids = json::array();
  for (Eigen::Index c = 0; c < index->centroids().rows(); ++c) {
    std::vector<double> row(index->centroids().row(c).begin(), index->centroids().row(c).end());
    centroids.push_back(row);
  }
  const json file = {{"mode", a.mode},
                     {"seed", a.seed},
                     {"embeddings_sha256", sha256_file(a.embeddings)},
                     {"head_sha256", a.head.empty() ? "" : sha256_file(a.head)},
                     {"documents", index->doc_ids().size()},
                     {"rows", index->rows()},
                     {"centroids", centroids}};
  write_text(a.out, file.dump() + "\n");
  manifest.add_output(a.out);
  manifest.write(a.out);
  std::cout << json{{"documents", index->doc_ids().size()}, {"rows", index->rows()}}.dump() << '\n';
  return kExitOk;
}

// ---- search --------------------------------------------------------------

struct SearchArgs {
  std::string index, embeddings, queries, head, out, f = "ts", aspect;
  std::size_t k = 10, nprobe = 3, probe_rows = 50, shortlist = 0;
  std::optional<double> tau;
  double lambda = 20.0;
};

int run_search(const SearchArgs& a) {
  Checks checks;
  checks.input(a.index, "--index");
  checks.input(a.embeddings, "--embeddings");
  checks.input(a.queries, "--queries");
  if (!a.head.empty()) checks.input(a.head, "--head");
  checks.output(a.out, "--out");
  checks.require(a.k >= 1, "--k must be >= 1");
  checks.require(a.lambda > 0.0, "--lambda must be > 0");
  checks.require(!a.tau || *a.tau > 0.0, "--tau must be > 0");
  checks.require(a.f == "ts" || a.f == "ot" || a.f == "att", "--f must be ts|ot|att");
  checks.done();

  std::optional<similarity::AspectSelection> sel;
  if (!a.aspect.empty()) sel.emplace(parse_indices(a.aspect));
  retrieval::SearchParams params;
  // Low temperature for aspect-level runs, effectively uniform marginals otherwise.
  params.score.tau = a.tau.value_or(sel ? 0.5 : 5000.0);
  params.score.sinkhorn.lambda = a.lambda;
  params.nprobe = a.nprobe;
  params.probe_rows = a.probe_rows;
  params.shortlist = a.shortlist;
  const auto kind = similarity::parse_score_kind(a.f);

  RunManifest manifest;
  manifest.command = "search";
  manifest.config = json{{"f", a.f},          {"k", a.k},         {"tau", params.score.tau},
                         {"lambda", a.lambda}, {"aspect", a.aspect}, {"nprobe", a.nprobe},
                         {"probe_rows", a.probe_rows}, {"shortlist", a.shortlist}}
                        .dump();
  for (const auto& p : {a.index, a.embeddings, a.queries}) manifest.add_input(p);
  if (!a.head.empty()) manifest.add_input(a.head);

  json index_file;
  {
    std::ifstream in(a.index);
    try {
      index_file = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad index file: ") + e.what());
    }
  }
  if (index_file.value("embeddings_sha256", "") != sha256_file(a.embeddings)) {
    throw FormatError("index was built from a different embeddings file");
  }
  if (index_file.value("head_sha256", "") != (a.head.empty() ? "" : sha256_file(a.head))) {
    throw FormatError("index was built with a different projection head");
  }
  const auto corpus = load_corpus(a.embeddings, a.head);
  const auto queries = load_corpus(a.queries, a.head);

  std::optional<retrieval::SentenceIndex> index;
  if (index_file.value("mode", "exact") == "coarse") {
    const auto rows = index_file.at("centroids").get<std::vector<std::vector<double>>>();
    Matrix centroids(static_cast<Eigen::Index>(rows.size()),
                     rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != static_cast<std::size_t>(centroids.cols())) throw FormatError("ragged centroids");
      for (std::size_t c = 0; c < rows[r].size(); ++c) {
        centroids(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
      }
    }
    index.emplace(retrieval::SentenceIndex::with_centroids(corpus, centroids));
  } else {
    index.emplace(retrieval::SentenceIndex::build(corpus, retrieval::IndexMode::kExact));
  }

  std::vector<retrieval::RankedList> results;
  {
    StageTimer timer(manifest, "search");
    for (const auto& [id, q] : queries) {
      results.push_back(sel ? retrieval::search_aspect(q, *sel, *index, kind, a.k, params)
                            : retrieval::search_whole(q, *index, kind, a.k, params));
    }
  }
  retrieval::write_rankings(results, a.out);
  manifest.add_output(a.out);
  manifest.write(a.out);
  std::cout << json{{"queries", results.size()}}.dump() << '\n';
  return kExitOk;
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string rankings, gold, out, gain = "exp";
  double p = 0.2;
  int threshold = 1;
};

int run_eval(const EvalArgs& a) {
  Checks checks;
  checks.input(a.rankings, "--rankings");
  checks.input(a.gold, "--gold");
  checks.output(a.out, "--out");
  checks.require(a.p > 0.0 && a.p < 1.0, "--p must be in (0, 1)");
  checks.require(a.gain == "exp" || a.gain == "linear", "--gain must be exp|linear");
  checks.require(a.threshold >= 1, "--threshold must be >= 1");
  checks.done();

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config = json{{"p", a.p}, {"threshold", a.threshold}, {"gain", a.gain}}.dump();
  manifest.add_input(a.rankings);
  manifest.add_input(a.gold);
  eval::MetricOptions options{a.p, a.threshold, a.gain == "exp" ? eval::Gain::kExponential : eval::Gain::kLinear};
  eval::MetricReport report;
  {
    StageTimer timer(manifest, "eval");
    report = eval::evaluate(retrieval::read_rankings(a.rankings), eval::read_gold(a.gold), options);
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  write_text(a.out, eval::report_json(report) + "\n");
  manifest.add_output(a.out);
  manifest.write(a.out);
  std::cout << json{{"map", report.map}, {"ndcg", report.mean_ndcg}, {"queries", report.per_query.size()}}.dump()
            << '\n';
  return kExitOk;
}

// ---- reformulate ---------------------------------------------------------

struct ReformulateArgs {
  std::string judgments, out;
  std::uint64_t seed = 0;
};

int run_reformulate(const ReformulateArgs& a) {
  Checks checks;
  checks.input(a.judgments, "--judgments");
  checks.output(a.out, "--out");
  checks.done();

  RunManifest manifest;
  manifest.command = "reformulate";
  manifest.seed = a.seed;
  manifest.config = json{{"seed", a.seed}}.dump();
  manifest.add_input(a.judgments);
  std::vector<eval::Judgment> judgments;
  std::ifstream in(a.judgments);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = json::parse(line);
      judgments.push_back({j.at("query").get<std::string>(), j.at("doc").get<std::string>(), j.at("grade").get<int>()});
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad judgment line: ") + e.what());
    }
  }
  const auto result = eval::treccovid_reformulate(judgments, a.seed);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  eval::write_gold(result.pools, a.out);
  manifest.add_output(a.out);
  manifest.write(a.out);
  std::cout << json{{"pools", result.pools.size()}}.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-level aspect matching for scientific document similarity"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  MineArgs mine;
  auto* mine_cmd = app.add_subcommand("mine", "Filter abstracts, group co-citations, emit training triples");
  mine_cmd->add_option("--corpus", mine.corpus, "Corpus JSON lines");
  mine_cmd->add_option("--out", mine.out, "Output triples JSON lines");
  mine_cmd->add_option("--count", mine.count, "Downsample to this many triples (0 keeps all)");
  mine_cmd->add_option("--seed", mine.seed, "RNG seed");
  mine_cmd->add_option("--domain", mine.domain, "Keep only records tagged with this domain");

  EncodeArgs encode;
  auto* encode_cmd = app.add_subcommand("encode", "Stub-encode corpus abstracts into an embedding file");
  encode_cmd->add_option("--corpus", encode.corpus, "Corpus JSON lines");
  encode_cmd->add_option("--out", encode.out, "Output embedding file");
  encode_cmd->add_option("--dim", encode.dim, "Embedding dimension");
  encode_cmd->add_option("--seed", encode.seed, "Trigram hash seed");
  encode_cmd->add_flag("--with-title", encode.with_title, "Prepend the title as its own sentence");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train the projection head on triples");
  train_cmd->add_option("--triples", tr.triples, "Triples JSON lines");
  train_cmd->add_option("--embeddings", tr.embeddings, "Base sentence embeddings");
  train_cmd->add_option("--aux-embeddings", tr.aux, "Frozen auxiliary sentence embeddings");
  train_cmd->add_option("--aux-seed", tr.aux_seed, "Stub-encoder seed for co-citation contexts");
  train_cmd->add_option("--config", tr.config, "Flat JSON run config");
  train_cmd->add_option("--out", tr.out, "Output head checkpoint");
  train_cmd->add_option("--objective", tr.objective, "ts|ot|ts+ot|abs|max|att");
  train_cmd->add_option("--lambda", tr.lambda, "Entropic regularization strength");
  train_cmd->add_option("--tau", tr.tau, "Marginal softmax temperature");
  train_cmd->add_option("--margin", tr.margin, "Triplet margin");
  train_cmd->add_option("--lr", tr.lr, "Peak learning rate");
  train_cmd->add_option("--epochs", tr.epochs, "Epochs");
  train_cmd->add_option("--batch-size", tr.batch_size, "Triples per optimizer step");
  train_cmd->add_option("--warmup", tr.warmup, "Linear warm-up steps");
  train_cmd->add_option("--holdout", tr.holdout, "Held-out fraction of triples");
  train_cmd->add_option("--threads", tr.threads, "Gradient worker threads");
  train_cmd->add_option("--seed", tr.seed, "RNG seed");

  IndexArgs ix;
  auto* index_cmd = app.add_subcommand("index", "Build a sentence index over an embedding file");
  index_cmd->add_option("--embeddings", ix.embeddings, "Corpus sentence embeddings");
  index_cmd->add_option("--head", ix.head, "Projection head applied before indexing");
  index_cmd->add_option("--mode", ix.mode, "exact|coarse");
  index_cmd->add_option("--centroids", ix.centroids, "k-means lists in coarse mode");
  index_cmd->add_option("--seed", ix.seed, "k-means seed");
  index_cmd->add_option("--out", ix.out, "Output index file");

  SearchArgs se;
  auto* search_cmd = app.add_subcommand("search", "Rank indexed documents for query documents");
  search_cmd->add_option("--index", se.index, "Index file from 'index'");
  search_cmd->add_option("--embeddings", se.embeddings, "Embedding file the index was built from");
  search_cmd->add_option("--queries", se.queries, "Query embedding file");
  search_cmd->add_option("--head", se.head, "Projection head (must match the index)");
  search_cmd->add_option("--f", se.f, "ts|ot|att");
  search_cmd->add_option("--k", se.k, "Results per query");
  search_cmd->add_option("--tau", se.tau, "Marginal temperature (default 5000, or 0.5 with --aspect)");
  search_cmd->add_option("--lambda", se.lambda, "Entropic regularization strength");
  search_cmd->add_option("--aspect", se.aspect, "Comma-separated query sentence indices");
  search_cmd->add_option("--nprobe", se.nprobe, "Inverted lists per probe (coarse)");
  search_cmd->add_option("--probe-rows", se.probe_rows, "Rows fetched per query sentence");
  search_cmd->add_option("--shortlist", se.shortlist, "Candidates re-scored by ot/att (0 = auto)");
  search_cmd->add_option("--out", se.out, "Output rankings JSON lines");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "MAP and NDCG@p of rankings against gold pools");
  eval_cmd->add_option("--rankings", ev.rankings, "Rankings JSON lines");
  eval_cmd->add_option("--gold", ev.gold, "Gold pools JSON lines");
  eval_cmd->add_option("--p", ev.p, "NDCG cutoff as a fraction of pool size");
  eval_cmd->add_option("--threshold", ev.threshold, "Minimum grade counted relevant for AP");
  eval_cmd->add_option("--gain", ev.gain, "exp|linear");
  eval_cmd->add_option("--out", ev.out, "Output report JSON");

  ReformulateArgs rf;
  auto* ref_cmd = app.add_subcommand("reformulate", "Turn ad-hoc judgments into query-by-document pools");
  ref_cmd->add_option("--judgments", rf.judgments, "JSON lines of {query, doc, grade}");
  ref_cmd->add_option("--seed", rf.seed, "Sampling seed");
  ref_cmd->add_option("--out", rf.out, "Output gold pools JSON lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*mine_cmd) return run_mine(mine);
    if (*encode_cmd) return run_encode(encode);
    if (*train_cmd) return run_train(tr);
    if (*index_cmd) return run_index(ix);
    if (*search_cmd) return run_search(se);
    if (*eval_cmd) return run_eval(ev);
    if (*ref_cmd) return run_reformulate(rf);
  } catch (const UsageProblems& u) {
    for (const auto& p : u.problems) std::cerr << "error: " << p << '\n';
    return kExitInput;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInput;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
