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
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace facetsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace embeddings {

// Sentence vectors of one document, one row per sentence.
struct SentenceMatrix {
  std::string doc_id;
  Matrix vectors;
  // Optional; empty or one entry per row.
  std::vector<std::string> sentence_texts;

  std::size_t rows() const { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(vectors.cols()); }
};

// Keyed by doc_id. Ordered so that iteration and serialization are stable.
using Corpus = std::map<std::string, SentenceMatrix>;

// Half-open token range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TokenMatrix {
  Matrix tokens;
  std::vector<Span> sentence_spans;
};

// Affine map x -> x * weight + bias applied row-wise.
struct ProjectionHead {
  Matrix weight;
  Vector bias;

  static ProjectionHead identity(std::size_t dim);
  std::size_t dim() const { return static_cast<std::size_t>(weight.rows()); }
};

// Throws InvalidInput if the matrix is empty or contains non-finite values.
void validate(const SentenceMatrix& s);

SentenceMatrix mean_pool(const TokenMatrix& tokens, std::string doc_id = {});

// Deterministic featurizer: hashed character trigrams (seeded) accumulated
// into `dim` buckets, then L2-normalized.
SentenceMatrix stub_encode(const std::vector<std::string>& sentences,
                           std::size_t dim, std::uint64_t seed,
                           std::string doc_id = {});

SentenceMatrix project(const SentenceMatrix& s, const ProjectionHead& head);
Corpus project(const Corpus& corpus, const ProjectionHead& head);

// Binary file layout: 5-byte magic, u32 dim, u32 doc count, then per doc
// u16 id length, id bytes, u32 rows, rows*dim f32. All little-endian.
inline constexpr std::string_view kEmbeddingMagic = "ASPV1";
inline constexpr std::string_view kHeadMagic = "ASPH1";

void write_embeddings(const Corpus& corpus, const std::filesystem::path& path);
Corpus read_embeddings(const std::filesystem::path& path);

// Same layout as the embedding file with kHeadMagic and two entries:
// "weight" (dim rows) and "bias" (1 row).
void write_head(const ProjectionHead& head, const std::filesystem::path& path);
ProjectionHead read_head(const std::filesystem::path& path);

// In-memory variants of the above, used by the file functions.
std::string encode_corpus(const Corpus& corpus, std::string_view magic);
Corpus decode_corpus(std::string_view bytes, std::string_view magic);

}  // namespace embeddings
}  // namespace facetsim
