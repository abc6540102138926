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

#include "facetsim/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "facetsim/errors.hpp"

namespace facetsim::training {

using nlohmann::json;

Objective parse_objective(std::string_view name) {
  if (name == "ts") return Objective::kTextualSupervision;
  if (name == "ot") return Objective::kOptimalTransport;
  if (name == "ts+ot" || name == "ts_ot") return Objective::kMultiTask;
  if (name == "abs") return Objective::kAbstractAlign;
  if (name == "max") return Objective::kMaxAlign;
  if (name == "att") return Objective::kAttention;
  throw InvalidInput("unknown objective '" + std::string(name) + "' (expected ts|ot|ts+ot|abs|max|att)");
}

std::string_view to_string(Objective objective) {
  switch (objective) {
    case Objective::kTextualSupervision: return "ts";
    case Objective::kOptimalTransport: return "ot";
    case Objective::kMultiTask: return "ts+ot";
    case Objective::kAbstractAlign: return "abs";
    case Objective::kMaxAlign: return "max";
    case Objective::kAttention: return "att";
  }
  return "?";
}

std::vector<std::string> TrainConfig::problems() const {
  std::vector<std::string> out;
  if (!(margin > 0.0)) out.emplace_back("margin must be > 0");
  if (!(lambda > 0.0)) out.emplace_back("lambda must be > 0");
  if (!(tau > 0.0)) out.emplace_back("tau must be > 0");
  if (!(learning_rate >= 0.0)) out.emplace_back("learning_rate must be >= 0");
  if (epochs < 1) out.emplace_back("epochs must be >= 1");
  if (batch_size < 1) out.emplace_back("batch_size must be >= 1");
  if (warmup_steps < 0) out.emplace_back("warmup_steps must be >= 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    out.emplace_back("holdout_fraction must be in [0, 1)");
  }
  if (sinkhorn_max_iters < 1) out.emplace_back("sinkhorn_max_iters must be >= 1");
  if (!(sinkhorn_tol > 0.0)) out.emplace_back("sinkhorn_tol must be > 0");
  if (threads < 1) out.emplace_back("threads must be >= 1");
  return out;
}

TrainConfig parse_config(std::string_view json_text) {
  TrainConfig c;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad config JSON: ") + e.what());
  }
  if (!j.is_object()) throw FormatError("config must be a flat JSON object");
  std::vector<std::string> errors;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "objective") c.objective = parse_objective(value.get<std::string>());
      else if (key == "margin") c.margin = value.get<double>();
      else if (key == "lambda") c.lambda = value.get<double>();
      else if (key == "tau") c.tau = value.get<double>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "warmup_steps") c.warmup_steps = value.get<int>();
      else if (key == "holdout_fraction") c.holdout_fraction = value.get<double>();
      else if (key == "sinkhorn_max_iters") c.sinkhorn_max_iters = value.get<int>();
      else if (key == "sinkhorn_tol") c.sinkhorn_tol = value.get<double>();
      else if (key == "threads") c.threads = value.get<int>();
      else if (key == "attention") {
        const auto s = value.get<std::string>();
        if (s == "joint") c.attention = similarity::AttentionNorm::kJoint;
        else if (s == "row") c.attention = similarity::AttentionNorm::kRowwise;
        else errors.push_back("attention must be joint|row");
      } else {
        errors.push_back("unknown config key '" + key + "'");
      }
    } catch (const json::exception&) {
      errors.push_back("wrong type for config key '" + key + "'");
    } catch (const InvalidInput& e) {
      errors.emplace_back(e.what());
    }
  }
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  " + e;
    throw FormatError(msg);
  }
  return c;
}

TrainConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const TrainConfig& c) {
  json j = {{"objective", to_string(c.objective)},
            {"margin", c.margin},
            {"lambda", c.lambda},
            {"tau", c.tau},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"warmup_steps", c.warmup_steps},
            {"holdout_fraction", c.holdout_fraction},
            {"sinkhorn_max_iters", c.sinkhorn_max_iters},
            {"sinkhorn_tol", c.sinkhorn_tol},
            {"attention", c.attention == similarity::AttentionNorm::kJoint ? "joint" : "row"},
            {"threads", c.threads}};
  return j.dump();
}

namespace {

// Lexicographically first argmax of a score matrix.
std::pair<std::size_t, std::size_t> argmax(const Matrix& scores) {
  std::pair<std::size_t, std::size_t> best{0, 0};
  double value = scores(0, 0);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < scores.cols(); ++j) {
      if (scores(i, j) > value) {
        value = scores(i, j);
        best = {static_cast<std::size_t>(i), static_cast<std::size_t>(j)};
      }
    }
  }
  return best;
}

}  // namespace

AlignmentTarget align_with_context(const Matrix& r_p, const Matrix& r_q, const Matrix& r_e) {
  if (r_e.rows() == 0) throw InvalidInput("align_with_context: empty context set");
  if (r_p.rows() == 0 || r_q.rows() == 0) throw InvalidInput("align_with_context: empty document");
  if (r_p.cols() != r_e.cols() || r_q.cols() != r_e.cols()) {
    throw InvalidInput("align_with_context: dimension mismatch");
  }
  const auto [ip, kp] = argmax(r_p * r_e.transpose());
  const auto [iq, kq] = argmax(r_q * r_e.transpose());
  return {ip, iq, kp, kq};
}

AlignmentTarget align_abstracts(const Matrix& r_p, const Matrix& r_q) {
  if (r_p.rows() == 0 || r_q.rows() == 0) throw InvalidInput("align_abstracts: empty document");
  if (r_p.cols() != r_q.cols()) throw InvalidInput("align_abstracts: dimension mismatch");
  const auto [ip, iq] = argmax(r_p * r_q.transpose());
  return {ip, iq, 0, 0};
}

double triplet_loss(double d_pos, double d_neg, double margin) {
  return std::max(d_pos - d_neg + margin, 0.0);
}

similarity::ScoreKind inference_kind(Objective objective) {
  switch (objective) {
    case Objective::kOptimalTransport:
    case Objective::kMultiTask:
      return similarity::ScoreKind::kOptimalTransport;
    case Objective::kAttention:
      return similarity::ScoreKind::kAttention;
    default:
      return similarity::ScoreKind::kSingle;
  }
}

namespace {

const embeddings::SentenceMatrix& lookup(const Corpus& corpus, const std::string& id,
                                         const char* which) {
  auto it = corpus.find(id);
  if (it == corpus.end()) {
    throw DataError(std::string("missing ") + which + " embeddings for '" + id + "'");
  }
  return it->second;
}

// One (p, p') pair pushed through the head: projected rows and distances.
struct ProjectedPair {
  const Matrix& left_in;
  const Matrix& right_in;
  Matrix left;
  Matrix right;
  Matrix dist;

  ProjectedPair(const Matrix& a, const Matrix& b, const ProjectionHead& head)
      : left_in(a), right_in(b) {
    if (a.cols() != head.weight.rows() || b.cols() != head.weight.rows()) {
      throw InvalidInput("embedding dimension does not match projection head");
    }
    left = (a * head.weight).rowwise() + head.bias.transpose();
    right = (b * head.weight).rowwise() + head.bias.transpose();
    dist = ot::pairwise_l2(left, right);
  }
};

// Distance of a pair plus d(distance)/dD.
struct Aggregate {
  double value = 0.0;
  Matrix grad;  // same shape as D
};

Aggregate cell(const Matrix& d, std::size_t i, std::size_t j) {
  if (i >= static_cast<std::size_t>(d.rows()) || j >= static_cast<std::size_t>(d.cols())) {
    throw DataError("alignment index outside document");
  }
  Aggregate out{d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)),
                Matrix::Zero(d.rows(), d.cols())};
  out.grad(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  return out;
}

Aggregate aggregate(const Matrix& d, similarity::ScoreKind kind, const TrainConfig& config) {
  switch (kind) {
    case similarity::ScoreKind::kSingle: {
      const auto m = similarity::f_ts(d);
      const auto& at = std::get<similarity::SingleMatch>(m.alignment);
      return cell(d, at.row, at.col);
    }
    case similarity::ScoreKind::kOptimalTransport: {
      auto m = similarity::f_ot(d, config.tau, config.sinkhorn());
      return {m.distance, std::get<ot::TransportPlan>(m.alignment).values};
    }
    case similarity::ScoreKind::kAttention: {
      auto m = similarity::f_att(d, config.tau, config.attention);
      const Matrix& a = std::get<Matrix>(m.alignment);
      Aggregate out{m.distance, Matrix(d.rows(), d.cols())};
      if (config.attention == similarity::AttentionNorm::kJoint) {
        out.grad = a.array() - a.array() * (d.array() - m.distance) / config.tau;
      } else {
        // Rows of a hold softmax / N; row_value is the unscaled row score.
        const double n = static_cast<double>(d.rows());
        for (Eigen::Index i = 0; i < d.rows(); ++i) {
          const double row_value = n * d.row(i).dot(a.row(i));
          out.grad.row(i) =
              a.row(i).array() - a.row(i).array() * (d.row(i).array() - row_value) / config.tau;
        }
      }
      return out;
    }
  }
  throw InvalidInput("unknown aggregation");
}

// Adds sign * d(distance)/d(head) given d(distance)/dD.
void backprop(const ProjectedPair& pair, const Matrix& grad_d, double sign, HeadGradient& out) {
  Matrix g_left = Matrix::Zero(pair.left.rows(), pair.left.cols());
  Matrix g_right = Matrix::Zero(pair.right.rows(), pair.right.cols());
  for (Eigen::Index i = 0; i < pair.dist.rows(); ++i) {
    for (Eigen::Index j = 0; j < pair.dist.cols(); ++j) {
      const double g = grad_d(i, j);
      const double dij = pair.dist(i, j);
      // Zero distance: use the zero subgradient.
      if (g == 0.0 || dij <= 0.0) continue;
      const Eigen::RowVectorXd diff = (pair.left.row(i) - pair.right.row(j)) * (g / dij);
      g_left.row(i) += diff;
      g_right.row(j) -= diff;
    }
  }
  out.weight.noalias() += sign * (pair.left_in.transpose() * g_left + pair.right_in.transpose() * g_right);
  out.bias += sign * (g_left.colwise().sum() + g_right.colwise().sum()).transpose();
}

Matrix contexts_for(const Triple& t, const TrainingData& data) {
  if (t.contexts.empty()) {
    throw DataError("triple (" + t.anchor_id + ", " + t.positive_id + ") has no co-citation contexts");
  }
  if (!data.encode_contexts) throw DataError("no context encoder configured");
  return data.encode_contexts(t.contexts);
}

struct Branch {
  Aggregate pos;
  Aggregate neg;
};

void accumulate_branch(const Branch& b, const ProjectedPair& pos, const ProjectedPair& neg,
                       double margin, bool want_grad, TripleLoss& out) {
  const double loss = triplet_loss(b.pos.value, b.neg.value, margin);
  out.loss += loss;
  if (want_grad && loss > 0.0) {
    backprop(pos, b.pos.grad, 1.0, out.grad);
    backprop(neg, b.neg.grad, -1.0, out.grad);
  }
}

TripleLoss evaluate(const Triple& t, const TrainConfig& config, const ProjectionHead& head,
                    const TrainingData& data, bool want_grad) {
  const auto& anchor = lookup(data.base, t.anchor_id, "base");
  const auto& positive = lookup(data.base, t.positive_id, "base");
  const auto& negative = lookup(data.base, t.negative_id, "base");
  const ProjectedPair pos(anchor.vectors, positive.vectors, head);
  const ProjectedPair neg(anchor.vectors, negative.vectors, head);

  TripleLoss out;
  const auto d = static_cast<Eigen::Index>(head.dim());
  out.grad = {Matrix::Zero(d, d), Vector::Zero(d)};

  using similarity::ScoreKind;
  auto single_branch = [&](const AlignmentTarget& pos_target, const Aggregate& neg_value) {
    Branch b{cell(pos.dist, pos_target.anchor_sentence, pos_target.positive_sentence), neg_value};
    accumulate_branch(b, pos, neg, config.margin, want_grad, out);
    return b;
  };

  switch (config.objective) {
    case Objective::kTextualSupervision:
    case Objective::kMultiTask: {
      const Matrix contexts = contexts_for(t, data);
      const auto target = align_with_context(lookup(data.aux, t.anchor_id, "auxiliary").vectors,
                                             lookup(data.aux, t.positive_id, "auxiliary").vectors,
                                             contexts);
      const Branch ts = single_branch(target, aggregate(neg.dist, ScoreKind::kSingle, config));
      out.d_pos = ts.pos.value;
      out.d_neg = ts.neg.value;
      if (config.objective == Objective::kMultiTask) {
        Branch otb{aggregate(pos.dist, ScoreKind::kOptimalTransport, config),
                   aggregate(neg.dist, ScoreKind::kOptimalTransport, config)};
        accumulate_branch(otb, pos, neg, config.margin, want_grad, out);
        out.d_pos = otb.pos.value;
        out.d_neg = otb.neg.value;
      }
      break;
    }
    case Objective::kAbstractAlign: {
      const auto& aux_anchor = lookup(data.aux, t.anchor_id, "auxiliary").vectors;
      const auto pos_target = align_abstracts(aux_anchor, lookup(data.aux, t.positive_id, "auxiliary").vectors);
      const auto neg_target = align_abstracts(aux_anchor, lookup(data.aux, t.negative_id, "auxiliary").vectors);
      const Branch b = single_branch(
          pos_target, cell(neg.dist, neg_target.anchor_sentence, neg_target.positive_sentence));
      out.d_pos = b.pos.value;
      out.d_neg = b.neg.value;
      break;
    }
    case Objective::kOptimalTransport:
    case Objective::kMaxAlign:
    case Objective::kAttention: {
      const auto kind = inference_kind(config.objective);
      Branch b{aggregate(pos.dist, kind, config), aggregate(neg.dist, kind, config)};
      accumulate_branch(b, pos, neg, config.margin, want_grad, out);
      out.d_pos = b.pos.value;
      out.d_neg = b.neg.value;
      break;
    }
  }
  return out;
}

}  // namespace

TripleLoss loss_for_triple(const Triple& triple, const TrainConfig& config,
                           const ProjectionHead& head, const TrainingData& data) {
  return evaluate(triple, config, head, data, true);
}

double triplet_accuracy(const std::vector<Triple>& triples, const TrainConfig& config,
                        const ProjectionHead& head, const Corpus& base) {
  if (triples.empty()) return 0.0;
  similarity::ScoreParams params;
  params.tau = config.tau;
  params.sinkhorn = config.sinkhorn();
  params.attention = config.attention;
  const auto kind = inference_kind(config.objective);
  std::size_t correct = 0;
  for (const auto& t : triples) {
    const auto a = embeddings::project(lookup(base, t.anchor_id, "base"), head);
    const auto p = embeddings::project(lookup(base, t.positive_id, "base"), head);
    const auto n = embeddings::project(lookup(base, t.negative_id, "base"), head);
    const double d_pos = similarity::score(ot::pairwise_l2(a.vectors, p.vectors), kind, params);
    const double d_neg = similarity::score(ot::pairwise_l2(a.vectors, n.vectors), kind, params);
    if (d_pos < d_neg) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(triples.size());
}

double schedule_factor(int step, int warmup_steps, int total_steps) {
  if (step < warmup_steps) {
    return static_cast<double>(step + 1) / static_cast<double>(warmup_steps);
  }
  if (total_steps <= warmup_steps) return 1.0;
  return std::max(0.0, static_cast<double>(total_steps - step) /
                           static_cast<double>(total_steps - warmup_steps));
}

namespace {

class Adam {
 public:
  explicit Adam(Eigen::Index dim)
      : m_w_(Matrix::Zero(dim, dim)), v_w_(Matrix::Zero(dim, dim)),
        m_b_(Vector::Zero(dim)), v_b_(Vector::Zero(dim)) {}

  void step(ProjectionHead& head, const HeadGradient& g, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, t_);
    const double c2 = 1.0 - std::pow(kBeta2, t_);
    m_w_ = kBeta1 * m_w_ + (1.0 - kBeta1) * g.weight;
    v_w_ = kBeta2 * v_w_ + (1.0 - kBeta2) * g.weight.cwiseAbs2();
    m_b_ = kBeta1 * m_b_ + (1.0 - kBeta1) * g.bias;
    v_b_ = kBeta2 * v_b_ + (1.0 - kBeta2) * g.bias.cwiseAbs2();
    head.weight.array() -= lr * (m_w_.array() / c1) / ((v_w_.array() / c2).sqrt() + kEps);
    head.bias.array() -= lr * (m_b_.array() / c1) / ((v_b_.array() / c2).sqrt() + kEps);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  Matrix m_w_, v_w_;
  Vector m_b_, v_b_;
  int t_ = 0;
};

std::vector<TripleLoss> evaluate_all(const std::vector<const Triple*>& batch, const TrainConfig& config,
                                     const ProjectionHead& head, const TrainingData& data,
                                     bool want_grad) {
  std::vector<TripleLoss> results(batch.size());
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), batch.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) results[i] = evaluate(*batch[i], config, head, data, want_grad);
    return results;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < batch.size(); i += workers) {
          results[i] = evaluate(*batch[i], config, head, data, want_grad);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

double mean_loss(const std::vector<const Triple*>& set, const TrainConfig& config,
                 const ProjectionHead& head, const TrainingData& data) {
  if (set.empty()) return 0.0;
  double total = 0.0;
  for (const auto& r : evaluate_all(set, config, head, data, false)) total += r.loss;
  return total / static_cast<double>(set.size());
}

}  // namespace

TrainResult train(const std::vector<Triple>& triples, const TrainConfig& config,
                  const TrainingData& data) {
  if (data.base.empty()) throw DataError("train: no base embeddings");
  return train(triples, config, data, ProjectionHead::identity(data.base.begin()->second.dim()));
}

TrainResult train(const std::vector<Triple>& triples, const TrainConfig& config,
                  const TrainingData& data, ProjectionHead initial) {
  if (auto errs = config.problems(); !errs.empty()) {
    std::string msg = "invalid training config:";
    for (const auto& e : errs) msg += "\n  " + e;
    throw InvalidInput(msg);
  }
  if (triples.empty()) throw InvalidInput("train: no triples");

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t held = 0;
  if (triples.size() >= 2 && config.holdout_fraction > 0.0) {
    held = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(triples.size()))));
    held = std::min(held, triples.size() - 1);
  }
  std::vector<const Triple*> holdout;
  std::vector<const Triple*> train_set;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < held ? holdout : train_set).push_back(&triples[order[k]]);
  }
  // Without a held-out split, model selection falls back to the training loss.
  const auto& selection_set = holdout.empty() ? train_set : holdout;

  TrainResult result;
  for (const auto* t : holdout) result.holdout.push_back(*t);
  ProjectionHead head = std::move(initial);
  result.head = head;
  double best = mean_loss(selection_set, config, head, data);
  result.holdout_losses.push_back(best);

  const auto batch = static_cast<std::size_t>(config.batch_size);
  const int steps_per_epoch = static_cast<int>((train_set.size() + batch - 1) / batch);
  const int total_steps = steps_per_epoch * config.epochs;
  Adam adam(static_cast<Eigen::Index>(head.dim()));
  int step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(train_set.begin(), train_set.end(), rng);
    for (std::size_t start = 0; start < train_set.size(); start += batch) {
      const std::vector<const Triple*> slice(
          train_set.begin() + static_cast<std::ptrdiff_t>(start),
          train_set.begin() + static_cast<std::ptrdiff_t>(std::min(start + batch, train_set.size())));
      const auto results = evaluate_all(slice, config, head, data, true);
      const auto d = static_cast<Eigen::Index>(head.dim());
      HeadGradient grad{Matrix::Zero(d, d), Vector::Zero(d)};
      double loss = 0.0;
      // Summed in batch order so threaded and serial runs agree.
      for (std::size_t i = 0; i < results.size(); ++i) {
        if (!std::isfinite(results[i].loss)) {
          throw NumericalError("non-finite loss at step " + std::to_string(step) + " for triple (" +
                               slice[i]->anchor_id + ", " + slice[i]->positive_id + ", " +
                               slice[i]->negative_id + ")");
        }
        loss += results[i].loss;
        grad.weight += results[i].grad.weight;
        grad.bias += results[i].grad.bias;
      }
      const double scale = 1.0 / static_cast<double>(results.size());
      grad.weight *= scale;
      grad.bias *= scale;
      result.step_losses.push_back(loss * scale);
      const double lr = config.learning_rate * schedule_factor(step, config.warmup_steps, total_steps);
      if (lr > 0.0) adam.step(head, grad, lr);
      ++step;
    }
    const double held_loss = mean_loss(selection_set, config, head, data);
    result.holdout_losses.push_back(held_loss);
    if (held_loss < best) {
      best = held_loss;
      result.head = head;
      result.best_epoch = static_cast<std::size_t>(epoch);
    }
  }
  return result;
}

}  // namespace facetsim::training
