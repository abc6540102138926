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

// Test-only generators and independent oracles. Nothing here calls into the
// code paths it is used to check.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facetsim/embeddings.hpp"
#include "facetsim/miner.hpp"
#include "facetsim/retrieval.hpp"
#include "facetsim/training.hpp"

namespace facetsim::testing {

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = u(rng);
  return m;
}

// Probability vector whose entries are multiples of 1e-6 (exactly
// representable by the integer-scaled exact solver).
inline Vector grid_marginal(std::mt19937_64& rng, Eigen::Index n) {
  std::uniform_int_distribution<long long> u(1, 1000);
  std::vector<long long> w(static_cast<std::size_t>(n));
  for (auto& x : w) x = u(rng);
  const long long total = std::accumulate(w.begin(), w.end(), 0LL);
  std::vector<long long> k(w.size());
  long long assigned = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    k[i] = std::max(1LL, w[i] * 1'000'000 / total);
    assigned += k[i];
  }
  k[0] += 1'000'000 - assigned;
  Vector out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = static_cast<double>(k[static_cast<std::size_t>(i)]) / 1e6;
  return out;
}

// Straightforward triple-loop product.
inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (Eigen::Index k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
  return out;
}

// Per-entry sqrt of summed squared differences, same accumulation order as
// a plain scalar loop.
inline double scalar_l2(const Matrix& a, Eigen::Index i, const Matrix& b, Eigen::Index j) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < a.cols(); ++k) {
    const double diff = a(i, k) - b(j, k);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

// Minimum transportation cost by enumerating every basis (spanning tree of
// the bipartite graph with n + m - 1 cells) and solving for its unique flow.
inline double brute_force_ot(const Matrix& d, const Vector& a, const Vector& b) {
  const Eigen::Index n = d.rows();
  const Eigen::Index m = d.cols();
  const Eigen::Index cells = n * m;
  const Eigen::Index basis = n + m - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> choose(static_cast<std::size_t>(cells), 0);
  std::fill(choose.end() - basis, choose.end(), 1);
  do {
    // Solve by peeling leaves: a row or column touching exactly one unsolved cell.
    std::vector<std::pair<Eigen::Index, Eigen::Index>> sel;
    for (Eigen::Index c = 0; c < cells; ++c) {
      if (choose[static_cast<std::size_t>(c)]) sel.emplace_back(c / m, c % m);
    }
    Vector ra = a;
    Vector rb = b;
    std::vector<bool> solved(sel.size(), false);
    Matrix flow = Matrix::Zero(n, m);
    bool progress = true;
    std::size_t done = 0;
    while (progress && done < sel.size()) {
      progress = false;
      for (Eigen::Index r = 0; r < n + m && !progress; ++r) {
        std::size_t count = 0, last = 0;
        for (std::size_t s = 0; s < sel.size(); ++s) {
          if (solved[s]) continue;
          const bool touches = r < n ? sel[s].first == r : sel[s].second == r - n;
          if (touches) {
            ++count;
            last = s;
          }
        }
        if (count != 1) continue;
        const auto [i, j] = sel[last];
        const double v = r < n ? ra[i] : rb[j];
        flow(i, j) = v;
        ra[i] -= v;
        rb[j] -= v;
        solved[last] = true;
        ++done;
        progress = true;
      }
    }
    if (done != sel.size()) continue;  // not a spanning tree
    if ((flow.array() < -1e-12).any()) continue;
    if (ra.cwiseAbs().maxCoeff() > 1e-9 || rb.cwiseAbs().maxCoeff() > 1e-9) continue;
    best = std::min(best, (d.array() * flow.array()).sum());
  } while (std::next_permutation(choose.begin(), choose.end()));
  return best;
}

// Pseudo-words built from syllables so trigram features vary.
// Word built from syllables kSyl[first, last].
inline std::string make_word(std::mt19937_64& rng, int first = 0, int last = 19) {
  static const char* kSyl[] = {"ka", "lo", "mi", "ter", "sun", "vex", "dra", "pol", "qui", "ren",
                               "sta", "mon", "bel", "cor", "fin", "gal", "hul", "jet", "nox", "pry"};
  std::uniform_int_distribution<int> syl(first, last);
  std::uniform_int_distribution<int> len(2, 3);
  std::string w;
  for (int k = len(rng); k > 0; --k) w += kSyl[syl(rng)];
  return w;
}

inline std::string make_sentence(std::mt19937_64& rng, const std::vector<std::string>& vocab, int words) {
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::string s;
  for (int k = 0; k < words; ++k) {
    if (k) s += ' ';
    s += vocab[pick(rng)];
  }
  return s;
}

// Corpus of `docs` stub-encoded documents with 3-6 sentences each.
inline embeddings::Corpus stub_corpus(std::size_t docs, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::string> vocab;
  for (int i = 0; i < 400; ++i) vocab.push_back(make_word(rng));
  std::uniform_int_distribution<int> nsent(3, 6);
  std::uniform_int_distribution<int> nwords(5, 10);
  embeddings::Corpus corpus;
  for (std::size_t d = 0; d < docs; ++d) {
    std::vector<std::string> sents;
    for (int s = nsent(rng); s > 0; --s) sents.push_back(make_sentence(rng, vocab, nwords(rng)));
    const std::string id = "doc" + std::to_string(1000 + d);
    corpus.emplace(id, embeddings::stub_encode(sents, dim, 7, id));
  }
  return corpus;
}

// Two topic clusters. Every sentence mixes a few cluster words into generic
// text, so the cluster signal is weak per sentence but linearly separable;
// positives share a cluster, negatives come from the other one.
struct PlantedClusters {
  std::vector<std::vector<std::string>> texts;  // per document
  std::vector<int> cluster;
  std::vector<std::string> ids;
  embeddings::Corpus base;
  embeddings::Corpus aux;
  std::vector<miner::Triple> train;
  std::vector<miner::Triple> heldout;
  std::size_t dim = 0;
  std::uint64_t aux_seed = 0;
};

inline PlantedClusters planted_clusters(std::size_t docs_per_cluster, std::size_t train_triples,
                                        std::size_t heldout_triples, std::size_t dim, std::uint64_t seed) {
  PlantedClusters pc;
  pc.dim = dim;
  pc.aux_seed = seed + 101;
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::string>> topic(2);
  std::vector<std::string> generic;
  // Disjoint syllable pools keep cluster vocabularies apart at the trigram level.
  for (int i = 0; i < 12; ++i) topic[0].push_back(make_word(rng, 0, 4));
  for (int i = 0; i < 12; ++i) topic[1].push_back(make_word(rng, 5, 9));
  for (int i = 0; i < 60; ++i) generic.push_back(make_word(rng, 10, 19));

  constexpr int kTopicWords = 2;
  constexpr int kGenericWords = 6;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t k = 0; k < docs_per_cluster; ++k) {
      std::vector<std::string> sents;
      for (int s = 0; s < 4; ++s) {
        std::vector<std::string> words;
        for (int w = 0; w < kTopicWords; ++w) words.push_back(make_sentence(rng, topic[static_cast<std::size_t>(c)], 1));
        for (int w = 0; w < kGenericWords; ++w) words.push_back(make_sentence(rng, generic, 1));
        std::shuffle(words.begin(), words.end(), rng);
        std::string text;
        for (const auto& w : words) text += (text.empty() ? "" : " ") + w;
        sents.push_back(text);
      }
      const std::string id = "c" + std::to_string(c) + "_" + std::to_string(k);
      pc.ids.push_back(id);
      pc.cluster.push_back(c);
      pc.texts.push_back(sents);
      pc.base.emplace(id, embeddings::stub_encode(sents, dim, seed + 1, id));
      pc.aux.emplace(id, embeddings::stub_encode(sents, dim, pc.aux_seed, id));
    }
  }
  // Held-out triples use documents never seen in training triples.
  const std::size_t train_docs = docs_per_cluster * 3 / 4;
  auto draw_triples = [&](std::size_t count, std::size_t lo, std::size_t hi) {
    std::vector<miner::Triple> out;
    std::uniform_int_distribution<std::size_t> member(lo, hi - 1);
    std::uniform_int_distribution<int> which(0, 1);
    while (out.size() < count) {
      const int c = which(rng);
      const std::size_t a = member(rng);
      const std::size_t p = member(rng);
      const std::size_t n = member(rng);
      if (a == p) continue;
      const auto idx = [&](int cl, std::size_t k) { return static_cast<std::size_t>(cl) * docs_per_cluster + k; };
      miner::Triple t{pc.ids[idx(c, a)], pc.ids[idx(c, p)], pc.ids[idx(1 - c, n)], {}};
      t.contexts.push_back(make_sentence(rng, topic[static_cast<std::size_t>(c)], 5) + " " +
                           make_sentence(rng, generic, 3));
      out.push_back(std::move(t));
    }
    return out;
  };
  pc.train = draw_triples(train_triples, 0, train_docs);
  pc.heldout = draw_triples(heldout_triples, train_docs, docs_per_cluster);
  return pc;
}

// Shared settings for training on planted clusters: small warm-up and a
// learning rate sized for a freshly initialized head.
inline training::TrainConfig planted_config(training::Objective objective) {
  training::TrainConfig c;
  c.objective = objective;
  c.learning_rate = 0.02;
  c.epochs = 5;
  c.batch_size = 8;
  c.warmup_steps = 5;
  c.holdout_fraction = 0.1;
  c.seed = 11;
  c.tau = 5000.0;
  c.sinkhorn_max_iters = 200;
  c.sinkhorn_tol = 1e-6;
  return c;
}

inline training::ContextEncoder context_encoder(const PlantedClusters& pc) {
  return [dim = pc.dim, seed = pc.aux_seed](const std::vector<std::string>& contexts) {
    return embeddings::stub_encode(contexts, dim, seed, "contexts").vectors;
  };
}

// Brute-force scorer written against raw matrices.
inline double oracle_score(const Matrix& d, similarity::ScoreKind kind, const similarity::ScoreParams& params) {
  switch (kind) {
    case similarity::ScoreKind::kSingle: {
      double best = d(0, 0);
      for (Eigen::Index k = 0; k < d.size(); ++k) best = std::min(best, d(k));
      return best;
    }
    case similarity::ScoreKind::kOptimalTransport:
      return ot::sinkhorn(d, ot::marginals(d, params.tau), params.sinkhorn).cost;
    case similarity::ScoreKind::kAttention: {
      const double lo = d.minCoeff();
      double mass = 0.0, total = 0.0;
      for (Eigen::Index k = 0; k < d.size(); ++k) {
        const double w = std::exp(-(d(k) - lo) / params.tau);
        mass += w;
        total += w * d(k);
      }
      return total / mass;
    }
  }
  return 0.0;
}

inline std::vector<retrieval::RankedEntry> exhaustive_scan(const embeddings::SentenceMatrix& q,
                                                        const std::vector<std::size_t>& rows,
                                                        const embeddings::Corpus& corpus,
                                                        similarity::ScoreKind kind,
                                                        const similarity::ScoreParams& params, std::size_t k) {
  std::vector<retrieval::RankedEntry> out;
  for (const auto& [id, doc] : corpus) {
    Matrix d(static_cast<Eigen::Index>(rows.size()), doc.vectors.rows());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (Eigen::Index j = 0; j < doc.vectors.rows(); ++j) {
        d(static_cast<Eigen::Index>(i), j) =
            scalar_l2(q.vectors, static_cast<Eigen::Index>(rows[i]), doc.vectors, j);
      }
    }
    out.push_back({id, oracle_score(d, kind, params)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score < b.score : a.doc_id < b.doc_id;
  });
  if (out.size() > k) out.resize(k);
  return out;
}

// Max deviation between analytic and central-difference head gradients,
// relative to the largest analytic entry.
template <typename LossFn>
double head_gradient_error(const embeddings::ProjectionHead& head, const training::HeadGradient& g,
                           LossFn loss) {
  const double eps = 1e-5;
  double worst = 0.0;
  double scale = std::max(g.weight.cwiseAbs().maxCoeff(), g.bias.cwiseAbs().maxCoeff());
  auto check = [&](double analytic, auto perturb) {
    embeddings::ProjectionHead up = head, down = head;
    perturb(up, eps);
    perturb(down, -eps);
    const double fd = (loss(up) - loss(down)) / (2 * eps);
    worst = std::max(worst, std::abs(fd - analytic) / std::max(scale, 1e-12));
  };
  for (Eigen::Index k = 0; k < head.weight.size(); ++k) {
    check(g.weight(k), [k](embeddings::ProjectionHead& h, double e) { h.weight(k) += e; });
  }
  for (Eigen::Index k = 0; k < head.bias.size(); ++k) {
    check(g.bias(k), [k](embeddings::ProjectionHead& h, double e) { h.bias(k) += e; });
  }
  return worst;
}

// Small fixture with random (non-identity) head for gradient checks.
struct GradFixture {
  embeddings::Corpus base;
  embeddings::Corpus aux;
  embeddings::ProjectionHead head;
  miner::Triple triple{"a", "p", "n", {"context one here", "another context sentence"}};
  std::size_t dim = 5;

  explicit GradFixture(std::uint64_t seed, Eigen::Index rows = 2) {
    std::mt19937_64 rng(seed);
    for (auto id : {"a", "p", "n"}) {
      base.emplace(id, embeddings::SentenceMatrix{id, random_matrix(rng, rows, 5), {}});
      aux.emplace(id, embeddings::SentenceMatrix{id, random_matrix(rng, rows, 5), {}});
    }
    head = embeddings::ProjectionHead::identity(dim);
    head.weight += 0.3 * random_matrix(rng, 5, 5);
    head.bias = 0.1 * random_matrix(rng, 5, 1);
  }

  training::TrainingData data() const {
    return {base, aux, [](const std::vector<std::string>& c) {
              return embeddings::stub_encode(c, 5, 3, "ctx").vectors;
            }};
  }
};

}  // namespace facetsim::testing
