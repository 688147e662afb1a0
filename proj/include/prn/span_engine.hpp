#pragma once

#include <span>
#include <vector>

#include "prn/corpus.hpp"
#include "prn/encoder.hpp"
#include "prn/model.hpp"

namespace prn {

// Span vector g = [x_start; x_end; soft head; pronoun feature], plus the
// attention weights that produced the soft head.
struct SpanRepresentation {
  Span span;
  std::vector<double> g;
  std::vector<double> attention;  // one weight per token in the span
};

// All spans of width <= max_width, ordered by (start asc, end asc).
std::vector<Span> enumerate_spans(int n_tokens, int max_width);

// Pronoun category used to pick the feature-table row: exact width-1 pronoun
// spans map to their token's type, everything else to None.
PronounType span_pronoun_type(const Document& doc, const Span& s);

// Softmax over raw per-token scores.
std::vector<double> attention_weights(std::span<const double> alpha);

// Per-token attention logits alpha_t = w_alpha . FFNN_alpha(x_t).
std::vector<double> token_attention_scores(const EmbeddingMatrix& emb,
                                           const ModelParams& params);

// (x_hat, delta) for one span given precomputed per-token logits.
struct HeadAttention {
  std::vector<double> soft_head;
  std::vector<double> weights;
};
HeadAttention head_attention(const EmbeddingMatrix& emb, const Span& s,
                             std::span<const double> alpha);

SpanRepresentation build_representation(const Document& doc,
                                        const EmbeddingMatrix& emb, const Span& s,
                                        std::span<const double> alpha,
                                        const ModelParams& params);

// Convenience: computes alpha internally. The batched overload above avoids
// recomputing per-token logits once per span.
SpanRepresentation build_representation(const Document& doc,
                                        const EmbeddingMatrix& emb, const Span& s,
                                        const ModelParams& params);

}  // namespace prn
