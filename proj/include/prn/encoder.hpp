#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "prn/corpus.hpp"

namespace prn {

// Per-document token vectors, row-major [rows x dim].
struct EmbeddingMatrix {
  std::string doc_id;
  int rows = 0;
  int dim = 0;
  std::vector<double> data;

  std::span<const double> row(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * dim,
            static_cast<std::size_t>(dim)};
  }
  std::span<double> row(int t) {
    return {data.data() + static_cast<std::size_t>(t) * dim,
            static_cast<std::size_t>(dim)};
  }
  bool operator==(const EmbeddingMatrix&) const = default;
};

using EmbeddingMap = std::map<std::string, EmbeddingMatrix>;

class EmbeddingError : public std::runtime_error {
 public:
  enum class Kind {
    BadMagic,
    Truncated,
    DimMismatch,
    TokenCountMismatch,
    DuplicateDoc,
    MissingDoc,
  };
  EmbeddingError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Binary embedding file: "EMB1" magic, then per document
//   u32 id_len, id bytes, u32 rows, u32 dim, rows*dim f32 (all little-endian).
// Record order is preserved, so write(load(f)) reproduces f byte for byte.
std::vector<EmbeddingMatrix> load_embeddings(std::istream& in);
std::vector<EmbeddingMatrix> load_embeddings_file(const std::string& path);
void write_embeddings(const std::vector<EmbeddingMatrix>& mats, std::ostream& out);
void write_embeddings_file(const std::vector<EmbeddingMatrix>& mats,
                           const std::string& path);

EmbeddingMap to_map(std::vector<EmbeddingMatrix> mats);

// Every document must have a matrix with matching row count; all matrices must
// share one dimension.
void check_embeddings(const std::vector<Document>& docs, const EmbeddingMap& embs);

// Overlapping segment windows covering [0, n_tokens). Consecutive segments
// start `stride` apart; the final segment is clipped to the token count.
struct SegmentRange {
  int start = 0;  // inclusive
  int end = 0;    // exclusive
  bool operator==(const SegmentRange&) const = default;
};

struct SegmentPlan {
  int n_tokens = 0;
  int max_len = 0;
  int stride = 0;
  std::vector<SegmentRange> segments;
};

SegmentPlan plan_segments(int n_tokens, int max_len = 512, int stride = 256);

// Resolves overlaps by giving each token the vector from the segment where it
// sits deepest inside (largest distance to the nearer boundary); ties go to
// the earlier segment. per_segment[i] is row-major (seg len x dim).
EmbeddingMatrix merge_segment_vectors(const SegmentPlan& plan,
                                      const std::vector<std::vector<double>>& per_segment,
                                      int dim);

// Context-free encoder: one vector per surface form, plus an UNK fallback for
// unseen surfaces (zeros unless overwritten).
class StaticLookupEncoder {
 public:
  StaticLookupEncoder(std::map<std::string, std::vector<double>> table, int dim);

  int dim() const { return dim_; }
  EmbeddingMatrix encode(const Document& doc) const;
  std::vector<EmbeddingMatrix> encode_corpus(const std::vector<Document>& docs) const;
  std::vector<double>& unk_vector() { return unk_; }
  const std::map<std::string, std::vector<double>>& table() const { return table_; }

 private:
  std::map<std::string, std::vector<double>> table_;
  std::vector<double> unk_;
  int dim_;
};

// Deterministic per-surface random vectors (f32-quantized) over the corpus
// vocabulary. Same surface + seed always yields the same vector.
StaticLookupEncoder make_surface_hash_encoder(const std::vector<Document>& docs,
                                              int dim, std::uint64_t seed);

// Text table, one "surface v1 .. vd" per line; dimension inferred from the
// first line.
StaticLookupEncoder load_text_table(std::istream& in);
StaticLookupEncoder load_text_table_file(const std::string& path);

}  // namespace prn
