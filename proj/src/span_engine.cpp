#include "prn/span_engine.hpp"

#include <algorithm>
#include <cmath>

#include "prn/errors.hpp"

namespace prn {

std::vector<Span> enumerate_spans(int n_tokens, int max_width) {
  if (n_tokens < 0) throw InvalidParam("enumerate_spans: negative token count");
  if (max_width < 1) throw InvalidParam("enumerate_spans: max_width must be >= 1");
  std::vector<Span> spans;
  for (int start = 0; start < n_tokens; ++start) {
    int last = std::min(start + max_width - 1, n_tokens - 1);
    for (int end = start; end <= last; ++end) spans.push_back({start, end});
  }
  return spans;
}

PronounType span_pronoun_type(const Document& doc, const Span& s) {
  if (!doc.in_bounds(s)) throw InvalidParam("span_pronoun_type: span out of bounds");
  if (s.width() == 1) return doc.tokens[s.start].pronoun_type;
  return PronounType::None;
}

std::vector<double> attention_weights(std::span<const double> alpha) {
  if (alpha.empty()) throw InvalidParam("attention_weights: empty span");
  double m = *std::max_element(alpha.begin(), alpha.end());
  std::vector<double> w(alpha.size());
  double z = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    w[i] = std::exp(alpha[i] - m);
    z += w[i];
  }
  for (double& v : w) v /= z;
  return w;
}

std::vector<double> token_attention_scores(const EmbeddingMatrix& emb,
                                           const ModelParams& params) {
  std::vector<double> alpha(emb.rows);
  for (int t = 0; t < emb.rows; ++t) {
    alpha[t] = dot(ffnn_hidden(params.attention, emb.row(t)),
                   params.attention_proj);
  }
  return alpha;
}

HeadAttention head_attention(const EmbeddingMatrix& emb, const Span& s,
                             std::span<const double> alpha) {
  HeadAttention out;
  out.weights = attention_weights(alpha.subspan(s.start, s.width()));
  out.soft_head.assign(emb.dim, 0.0);
  for (int t = 0; t < s.width(); ++t) {
    std::span<const double> x = emb.row(s.start + t);
    for (int i = 0; i < emb.dim; ++i) out.soft_head[i] += out.weights[t] * x[i];
  }
  return out;
}

SpanRepresentation build_representation(const Document& doc,
                                        const EmbeddingMatrix& emb, const Span& s,
                                        std::span<const double> alpha,
                                        const ModelParams& params) {
  if (!doc.in_bounds(s)) throw InvalidParam("build_representation: span out of bounds");
  if (emb.dim != params.token_dim) {
    throw ShapeMismatch("build_representation: embedding dim != model token dim");
  }
  SpanRepresentation rep;
  rep.span = s;
  HeadAttention head = head_attention(emb, s, alpha);
  rep.attention = std::move(head.weights);
  rep.g.reserve(params.rep_dim());
  std::span<const double> first = emb.row(s.start);
  std::span<const double> last = emb.row(s.end);
  rep.g.insert(rep.g.end(), first.begin(), first.end());
  rep.g.insert(rep.g.end(), last.begin(), last.end());
  rep.g.insert(rep.g.end(), head.soft_head.begin(), head.soft_head.end());
  std::span<const double> phi =
      params.pronoun_features.row(static_cast<int>(span_pronoun_type(doc, s)));
  rep.g.insert(rep.g.end(), phi.begin(), phi.end());
  return rep;
}

SpanRepresentation build_representation(const Document& doc,
                                        const EmbeddingMatrix& emb, const Span& s,
                                        const ModelParams& params) {
  return build_representation(doc, emb, s, token_attention_scores(emb, params),
                              params);
}

}  // namespace prn
