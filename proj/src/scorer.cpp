#include "prn/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prn/errors.hpp"

namespace prn {

void ScoreOptions::validate() const {
  if (max_span_width < 1) throw InvalidParam("ScoreOptions: max_span_width >= 1");
  if (!(top_span_ratio > 0.0 && top_span_ratio <= 1.0)) {
    throw InvalidParam("ScoreOptions: top_span_ratio in (0, 1]");
  }
  if (coarse_cap < 1) throw InvalidParam("ScoreOptions: coarse_cap >= 1");
  if (refine_rounds < 0) throw InvalidParam("ScoreOptions: refine_rounds >= 0");
}

int top_span_count(int n, double ratio) {
  if (n < 0) throw InvalidParam("top_span_count: negative n");
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw InvalidParam("top_span_count: ratio must be in (0, 1]");
  }
  double target = ratio * n;
  int k = static_cast<int>(target);
  // ceil, but immune to products like 0.4*10 landing a hair above an integer
  if (target - k > 1e-9) ++k;
  return std::min(k, n);
}

double mention_score(std::span<const double> g, const ModelParams& params) {
  return dot(ffnn_hidden(params.mention, g), params.mention_proj);
}

double antecedent_score(std::span<const double> g_i, std::span<const double> g_j,
                        const ModelParams& params) {
  if (g_i.size() != g_j.size()) throw ShapeMismatch("antecedent_score: size mismatch");
  std::vector<double> pair;
  pair.reserve(3 * g_i.size());
  pair.insert(pair.end(), g_i.begin(), g_i.end());
  pair.insert(pair.end(), g_j.begin(), g_j.end());
  for (std::size_t k = 0; k < g_i.size(); ++k) pair.push_back(g_i[k] * g_j[k]);
  return dot(ffnn_hidden(params.antecedent, pair), params.antecedent_proj);
}

double pairwise_score(int i, int j, std::span<const double> mention_scores,
                      double antecedent_score) {
  if (j == -1) return 0.0;
  if (j < 0 || j >= i) {
    throw OrderViolation("pairwise_score: candidate must precede the span");
  }
  return mention_scores[i] + mention_scores[j] + antecedent_score;
}

std::vector<int> select_top_spans(const std::vector<double>& mention_scores,
                                  double ratio) {
  int n = static_cast<int>(mention_scores.size());
  int k = top_span_count(n, ratio);
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // Stability keeps the positional tie rule: earlier start, then shorter span.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return mention_scores[a] > mention_scores[b];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

double coarse_score(std::span<const double> g_i, std::span<const double> g_j,
                    double sm_i, double sm_j, const Mat& coarse_w) {
  if (static_cast<int>(g_i.size()) != coarse_w.rows ||
      static_cast<int>(g_j.size()) != coarse_w.cols) {
    throw ShapeMismatch("coarse_score: size mismatch");
  }
  double bilinear = 0.0;
  for (int r = 0; r < coarse_w.rows; ++r) {
    double acc = 0.0;
    const double* wr = coarse_w.a.data() + static_cast<std::size_t>(r) * coarse_w.cols;
    for (int c = 0; c < coarse_w.cols; ++c) acc += wr[c] * g_j[c];
    bilinear += g_i[r] * acc;
  }
  return bilinear + sm_i + sm_j;
}

std::vector<std::vector<int>> coarse_candidates(
    const std::vector<std::vector<double>>& g_kept,
    const std::vector<double>& sm_kept, const Mat& coarse_w, int cap) {
  if (cap < 1) throw InvalidParam("coarse_candidates: cap must be >= 1");
  if (g_kept.size() != sm_kept.size()) {
    throw ShapeMismatch("coarse_candidates: score/vector count mismatch");
  }
  std::vector<std::vector<int>> out(g_kept.size());
  for (std::size_t i = 0; i < g_kept.size(); ++i) {
    std::vector<double> sc(i);
    for (std::size_t j = 0; j < i; ++j) {
      sc[j] = coarse_score(g_kept[i], g_kept[j], sm_kept[i], sm_kept[j], coarse_w);
    }
    std::vector<int> order(i);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sc[a] > sc[b]; });
    if (static_cast<int>(order.size()) > cap) order.resize(cap);
    std::sort(order.begin(), order.end());
    out[i] = std::move(order);
  }
  return out;
}

std::vector<double> softmax_distribution(std::span<const double> scores) {
  if (scores.empty()) throw InvalidParam("softmax_distribution: empty scores");
  double m = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(scores[i] - m);
    z += p[i];
  }
  for (double& v : p) v /= z;
  return p;
}

std::vector<double> antecedent_distribution(std::span<const double> real_scores) {
  std::vector<double> with_eps;
  with_eps.reserve(real_scores.size() + 1);
  with_eps.push_back(0.0);
  with_eps.insert(with_eps.end(), real_scores.begin(), real_scores.end());
  return softmax_distribution(with_eps);
}

std::vector<std::vector<double>> refine_step(
    const std::vector<std::vector<double>>& g_kept,
    const std::vector<AntecedentRow>& rows, const ModelParams& params) {
  if (g_kept.size() != rows.size()) {
    throw ShapeMismatch("refine_step: row count mismatch");
  }
  int g_dim = params.rep_dim();
  std::vector<std::vector<double>> out(g_kept.size());
  for (std::size_t i = 0; i < g_kept.size(); ++i) {
    const AntecedentRow& row = rows[i];
    // a_i: expected antecedent vector; the dummy slot contributes g_i itself.
    std::vector<double> a(g_kept[i]);
    for (double& v : a) v *= row.distribution[0];
    for (std::size_t k = 0; k < row.candidates.size(); ++k) {
      const std::vector<double>& gj = g_kept[row.candidates[k]];
      double p = row.distribution[k + 1];
      for (int c = 0; c < g_dim; ++c) a[c] += p * gj[c];
    }
    std::vector<double> gate_in;
    gate_in.reserve(2 * g_dim);
    gate_in.insert(gate_in.end(), g_kept[i].begin(), g_kept[i].end());
    gate_in.insert(gate_in.end(), a.begin(), a.end());
    std::vector<double>& gi = out[i];
    gi.resize(g_dim);
    for (int r = 0; r < g_dim; ++r) {
      double acc = params.refine_gate_b[r];
      const double* wr = params.refine_gate_w.a.data() +
                         static_cast<std::size_t>(r) * params.refine_gate_w.cols;
      for (int c = 0; c < 2 * g_dim; ++c) acc += wr[c] * gate_in[c];
      double f = 1.0 / (1.0 + std::exp(-acc));
      gi[r] = f * g_kept[i][r] + (1.0 - f) * a[r];
    }
  }
  return out;
}

namespace {

std::vector<AntecedentRow> make_rows(const std::vector<std::vector<double>>& g_kept,
                                     const std::vector<double>& sm_kept,
                                     const std::vector<std::vector<int>>& candidates,
                                     const ModelParams& params) {
  std::vector<AntecedentRow> rows(g_kept.size());
  for (std::size_t i = 0; i < g_kept.size(); ++i) {
    AntecedentRow& row = rows[i];
    row.candidates = candidates[i];
    row.scores.resize(row.candidates.size());
    for (std::size_t k = 0; k < row.candidates.size(); ++k) {
      int j = row.candidates[k];
      double sa = antecedent_score(g_kept[i], g_kept[j], params);
      row.scores[k] = pairwise_score(static_cast<int>(i), j, sm_kept, sa);
    }
    row.distribution = antecedent_distribution(row.scores);
  }
  return rows;
}

}  // namespace

DocumentScores score_document(const Document& doc, const EmbeddingMatrix& emb,
                              const ModelParams& params, const ScoreOptions& opts) {
  opts.validate();
  params.check_shapes();
  if (emb.rows != doc.size()) {
    throw ShapeMismatch("score_document: embedding rows != token count");
  }
  DocumentScores out;
  out.spans = enumerate_spans(doc.size(), opts.max_span_width);
  std::vector<double> alpha = token_attention_scores(emb, params);
  std::vector<std::vector<double>> g(out.spans.size());
  out.mention_scores.resize(out.spans.size());
  for (std::size_t i = 0; i < out.spans.size(); ++i) {
    g[i] = build_representation(doc, emb, out.spans[i], alpha, params).g;
    out.mention_scores[i] = mention_score(g[i], params);
  }
  out.kept = select_top_spans(out.mention_scores, opts.top_span_ratio);

  std::vector<std::vector<double>> g_kept(out.kept.size());
  std::vector<double> sm_kept(out.kept.size());
  for (std::size_t i = 0; i < out.kept.size(); ++i) {
    g_kept[i] = g[out.kept[i]];
    sm_kept[i] = out.mention_scores[out.kept[i]];
  }
  // Candidate sets come from the pre-refinement representations and stay
  // fixed across refinement rounds.
  std::vector<std::vector<int>> candidates =
      coarse_candidates(g_kept, sm_kept, params.coarse, opts.coarse_cap);

  for (int round = 0; round < opts.refine_rounds; ++round) {
    std::vector<AntecedentRow> rows = make_rows(g_kept, sm_kept, candidates, params);
    g_kept = refine_step(g_kept, rows, params);
    for (std::size_t i = 0; i < g_kept.size(); ++i) {
      sm_kept[i] = mention_score(g_kept[i], params);
    }
  }
  out.rows = make_rows(g_kept, sm_kept, candidates, params);
  out.kept_scores = std::move(sm_kept);
  return out;
}

}  // namespace prn
