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

#include "facetsim/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "facetsim/errors.hpp"

namespace facetsim::embeddings {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) {
    out.push_back(static_cast<char>((v >> shift) & 0xff));
  }
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n) {
      throw FormatError(std::string("truncated payload while reading ") + what);
    }
    auto view = bytes_.substr(pos_, n);
    pos_ += n;
    return view;
  }

  std::uint16_t u16(const char* what) {
    auto b = take(2, what);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(b[0]) |
                                      (static_cast<unsigned char>(b[1]) << 8));
  }

  std::uint32_t u32(const char* what) {
    auto b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }

  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

// FNV-1a, with the seed folded into the offset basis.
std::uint64_t hash_bytes(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ (seed * 0x9E3779B97F4A7C15ULL);
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  // Final avalanche (splitmix64 finalizer); FNV low bits are weak for mod d.
  h ^= h >> 30;
  h *= 0xBF58476D1CE4E5B9ULL;
  h ^= h >> 27;
  h *= 0x94D049BB133111EBULL;
  h ^= h >> 31;
  return h;
}

}  // namespace

ProjectionHead ProjectionHead::identity(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return {Matrix::Identity(d, d), Vector::Zero(d)};
}

void validate(const SentenceMatrix& s) {
  if (s.vectors.rows() == 0 || s.vectors.cols() == 0) {
    throw InvalidInput("sentence matrix '" + s.doc_id + "' is empty");
  }
  if (!s.vectors.allFinite()) {
    throw InvalidInput("sentence matrix '" + s.doc_id + "' has non-finite entries");
  }
  if (!s.sentence_texts.empty() && s.sentence_texts.size() != s.rows()) {
    throw InvalidInput("sentence_texts size does not match row count for '" + s.doc_id + "'");
  }
}

SentenceMatrix mean_pool(const TokenMatrix& tokens, std::string doc_id) {
  const auto total = static_cast<std::size_t>(tokens.tokens.rows());
  if (tokens.sentence_spans.empty()) throw InvalidInput("mean_pool: no sentence spans");

  std::vector<Span> sorted = tokens.sentence_spans;
  std::sort(sorted.begin(), sorted.end(),
            [](const Span& a, const Span& b) { return a.begin < b.begin; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].begin >= sorted[i].end) throw InvalidInput("mean_pool: empty span");
    if (sorted[i].end > total) throw InvalidInput("mean_pool: span out of bounds");
    if (i > 0 && sorted[i].begin < sorted[i - 1].end) {
      throw InvalidInput("mean_pool: overlapping spans");
    }
  }

  SentenceMatrix out;
  out.doc_id = std::move(doc_id);
  out.vectors.resize(static_cast<Eigen::Index>(tokens.sentence_spans.size()), tokens.tokens.cols());
  for (std::size_t i = 0; i < tokens.sentence_spans.size(); ++i) {
    const Span& span = tokens.sentence_spans[i];
    const auto len = static_cast<Eigen::Index>(span.end - span.begin);
    out.vectors.row(static_cast<Eigen::Index>(i)) =
        tokens.tokens.middleRows(static_cast<Eigen::Index>(span.begin), len).colwise().mean();
  }
  return out;
}

SentenceMatrix stub_encode(const std::vector<std::string>& sentences, std::size_t dim,
                           std::uint64_t seed, std::string doc_id) {
  if (dim < 2) throw InvalidInput("stub_encode: dim must be >= 2");
  if (sentences.empty()) throw InvalidInput("stub_encode: no sentences");

  SentenceMatrix out;
  out.doc_id = std::move(doc_id);
  out.vectors = Matrix::Zero(static_cast<Eigen::Index>(sentences.size()),
                             static_cast<Eigen::Index>(dim));
  out.sentence_texts = sentences;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].empty()) throw InvalidInput("stub_encode: empty sentence");
    std::string padded;
    padded.reserve(sentences[i].size() + 2);
    padded.push_back(' ');
    for (unsigned char c : sentences[i]) {
      padded.push_back(static_cast<char>(std::tolower(c)));
    }
    padded.push_back(' ');
    auto row = out.vectors.row(static_cast<Eigen::Index>(i));
    for (std::size_t k = 0; k + 3 <= padded.size(); ++k) {
      const auto bucket = hash_bytes(std::string_view(padded).substr(k, 3), seed) % dim;
      row(static_cast<Eigen::Index>(bucket)) += 1.0;
    }
    row /= row.norm();
  }
  return out;
}

SentenceMatrix project(const SentenceMatrix& s, const ProjectionHead& head) {
  if (head.weight.rows() != head.weight.cols() || head.bias.size() != head.weight.rows()) {
    throw InvalidInput("project: malformed projection head");
  }
  if (s.vectors.cols() != head.weight.rows()) {
    throw InvalidInput("project: dimension mismatch for '" + s.doc_id + "'");
  }
  SentenceMatrix out;
  out.doc_id = s.doc_id;
  out.sentence_texts = s.sentence_texts;
  out.vectors = (s.vectors * head.weight).rowwise() + head.bias.transpose();
  return out;
}

Corpus project(const Corpus& corpus, const ProjectionHead& head) {
  Corpus out;
  for (const auto& [id, s] : corpus) out.emplace(id, project(s, head));
  return out;
}

std::string encode_corpus(const Corpus& corpus, std::string_view magic) {
  std::string out(magic);
  const std::size_t dim = corpus.empty() ? 0 : corpus.begin()->second.dim();
  put_u32(out, static_cast<std::uint32_t>(dim));
  put_u32(out, static_cast<std::uint32_t>(corpus.size()));
  for (const auto& [id, s] : corpus) {
    if (s.dim() != dim) throw InvalidInput("write_embeddings: mixed dimensions in corpus");
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InvalidInput("write_embeddings: doc id too long");
    }
    put_u16(out, static_cast<std::uint16_t>(id.size()));
    out.append(id);
    put_u32(out, static_cast<std::uint32_t>(s.rows()));
    for (Eigen::Index r = 0; r < s.vectors.rows(); ++r) {
      for (Eigen::Index c = 0; c < s.vectors.cols(); ++c) {
        const auto v = static_cast<float>(s.vectors(r, c));
        if (!std::isfinite(v)) {
          throw InvalidInput("write_embeddings: value not representable as finite f32 in '" + id + "'");
        }
        put_f32(out, v);
      }
    }
  }
  return out;
}

Corpus decode_corpus(std::string_view bytes, std::string_view magic) {
  Reader in(bytes);
  if (bytes.substr(0, magic.size()) != magic) {
    throw FormatError("bad magic: expected " + std::string(magic));
  }
  in.take(magic.size(), "magic");
  const std::uint32_t dim = in.u32("dimension");
  const std::uint32_t docs = in.u32("document count");
  if (docs > 0 && dim == 0) throw FormatError("zero dimension");
  Corpus corpus;
  for (std::uint32_t doc = 0; doc < docs; ++doc) {
    const std::uint16_t id_len = in.u16("id length");
    std::string id(in.take(id_len, "doc id"));
    const std::uint32_t rows = in.u32("row count");
    if (rows == 0) throw FormatError("document '" + id + "' has no rows");
    SentenceMatrix s;
    s.doc_id = id;
    s.vectors.resize(rows, dim);
    for (std::uint32_t r = 0; r < rows; ++r) {
      for (std::uint32_t c = 0; c < dim; ++c) {
        const float v = in.f32("vector payload");
        if (!std::isfinite(v)) throw FormatError("non-finite entry in '" + id + "'");
        s.vectors(r, c) = v;
      }
    }
    if (!corpus.emplace(id, std::move(s)).second) throw FormatError("duplicate doc id '" + id + "'");
  }
  if (!in.done()) throw FormatError("trailing bytes after last document");
  return corpus;
}

void write_embeddings(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, encode_corpus(corpus, kEmbeddingMagic));
}

Corpus read_embeddings(const std::filesystem::path& path) {
  return decode_corpus(read_file(path), kEmbeddingMagic);
}

void write_head(const ProjectionHead& head, const std::filesystem::path& path) {
  Corpus c;
  c["weight"] = SentenceMatrix{"weight", head.weight, {}};
  c["bias"] = SentenceMatrix{"bias", head.bias.transpose(), {}};
  write_file(path, encode_corpus(c, kHeadMagic));
}

ProjectionHead read_head(const std::filesystem::path& path) {
  Corpus c = decode_corpus(read_file(path), kHeadMagic);
  auto w = c.find("weight");
  auto b = c.find("bias");
  if (c.size() != 2 || w == c.end() || b == c.end()) {
    throw FormatError("head file must hold exactly 'weight' and 'bias'");
  }
  if (w->second.vectors.rows() != w->second.vectors.cols() || b->second.vectors.rows() != 1) {
    throw FormatError("head file has inconsistent shapes");
  }
  return {w->second.vectors, b->second.vectors.row(0).transpose()};
}

}  // namespace facetsim::embeddings
