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
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "facetsim/embeddings.hpp"
#include "facetsim/miner.hpp"
#include "facetsim/similarity.hpp"

namespace facetsim::training {

using embeddings::Corpus;
using embeddings::ProjectionHead;
using miner::Triple;

enum class Objective {
  kTextualSupervision,  // single match anchored on co-citation contexts
  kOptimalTransport,    // <D, P> multi-match
  kMultiTask,           // sum of the two losses above
  kAbstractAlign,       // single match aligned between abstracts with the auxiliary encoder
  kMaxAlign,            // single best match from the trainable vectors themselves
  kAttention,           // <D, softmax(-D / tau)>
};

Objective parse_objective(std::string_view name);
std::string_view to_string(Objective objective);

struct TrainConfig {
  Objective objective = Objective::kMultiTask;
  double margin = 1.0;
  double lambda = 20.0;
  double tau = 5000.0;
  double learning_rate = 2e-5;
  int epochs = 1;
  int batch_size = 30;
  std::uint64_t seed = 0;
  int warmup_steps = 2000;
  double holdout_fraction = 0.05;
  int sinkhorn_max_iters = 1000;
  double sinkhorn_tol = 1e-6;
  similarity::AttentionNorm attention = similarity::AttentionNorm::kJoint;
  // Worker threads for per-triple gradients; 1 means fully serial.
  int threads = 1;

  // Every violated constraint, empty when the config is usable.
  std::vector<std::string> problems() const;
  ot::SinkhornOptions sinkhorn() const { return {lambda, sinkhorn_max_iters, sinkhorn_tol}; }
};

// Flat JSON object with the TrainConfig field names. Unknown keys are errors.
TrainConfig read_config(const std::filesystem::path& path);
TrainConfig parse_config(std::string_view json_text);
std::string dump_config(const TrainConfig& config);

struct AlignmentTarget {
  std::size_t anchor_sentence = 0;
  std::size_t positive_sentence = 0;
  std::size_t context_index = 0;           // context best matching the anchor
  std::size_t positive_context_index = 0;  // context best matching the positive
};

// Joint argmax over (sentence, context) of R_p R_e^T, separately for each
// paper. Ties resolve to the smallest sentence index, then context index.
AlignmentTarget align_with_context(const Matrix& r_p, const Matrix& r_q, const Matrix& r_e);

// Argmax of R_p R_q^T: the abstract-to-abstract alignment used by kAbstractAlign.
AlignmentTarget align_abstracts(const Matrix& r_p, const Matrix& r_q);

double triplet_loss(double d_pos, double d_neg, double margin);

// Encodes co-citation contexts into the auxiliary space.
using ContextEncoder = std::function<Matrix(const std::vector<std::string>&)>;

struct TrainingData {
  const Corpus& base;  // inputs to the projection head
  const Corpus& aux;   // frozen auxiliary sentence vectors
  ContextEncoder encode_contexts;
};

struct HeadGradient {
  Matrix weight;
  Vector bias;
};

struct TripleLoss {
  double loss = 0.0;
  double d_pos = 0.0;
  double d_neg = 0.0;
  HeadGradient grad;
};

// Loss and its gradient w.r.t. the head. Transport plans, alignment indices
// and argmin cells are held constant while differentiating.
TripleLoss loss_for_triple(const Triple& triple, const TrainConfig& config,
                           const ProjectionHead& head, const TrainingData& data);

// Distance the trained model uses at inference for an objective.
similarity::ScoreKind inference_kind(Objective objective);

// Fraction of triples with d_pos < d_neg under the inference distance.
double triplet_accuracy(const std::vector<Triple>& triples, const TrainConfig& config,
                        const ProjectionHead& head, const Corpus& base);

struct TrainResult {
  ProjectionHead head;               // best checkpoint by held-out loss
  std::vector<double> step_losses;   // mean batch loss per optimizer step
  std::vector<double> holdout_losses;  // index 0 is the initial head
  std::size_t best_epoch = 0;
  std::vector<Triple> holdout;
};

// Learning-rate multiplier: linear warm-up then linear decay to 0 at total_steps.
double schedule_factor(int step, int warmup_steps, int total_steps);

// Splits 'holdout_fraction' of the triples off by seed, runs Adam, and keeps
// the head with the lowest held-out loss (the initial head included).
TrainResult train(const std::vector<Triple>& triples, const TrainConfig& config,
                  const TrainingData& data);
TrainResult train(const std::vector<Triple>& triples, const TrainConfig& config,
                  const TrainingData& data, ProjectionHead initial);

}  // namespace facetsim::training
