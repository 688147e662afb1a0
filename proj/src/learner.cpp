#include "prn/learner.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "prn/autodiff.hpp"
#include "prn/errors.hpp"
#include "prn/resolver.hpp"
#include "prn/rng.hpp"
#include "prn/span_engine.hpp"

namespace prn {

namespace {

double stable_softplus(double s) {
  return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

double logsumexp(std::span<const double> v) {
  double m = *std::max_element(v.begin(), v.end());
  double z = 0.0;
  for (double x : v) z += std::exp(x - m);
  return m + std::log(z);
}

double logsumexp_subset(std::span<const double> v, std::span<const int> idx) {
  double m = v[idx[0]];
  for (int i : idx) m = std::max(m, v[i]);
  double z = 0.0;
  for (int i : idx) z += std::exp(v[i] - m);
  return m + std::log(z);
}

std::vector<char> mention_labels_for(const Document& doc,
                                     const std::vector<Span>& spans) {
  std::set<Span> gold(doc.gold_mentions.begin(), doc.gold_mentions.end());
  std::vector<char> labels(spans.size(), 0);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    labels[i] = gold.contains(spans[i]) ? 1 : 0;
  }
  return labels;
}

// Slot indices (0 = dummy) of gold antecedents surviving pruning, per kept span.
std::vector<std::vector<int>> gold_slots_for(
    const Document& doc, const std::vector<Span>& spans,
    const std::vector<int>& kept,
    const std::vector<std::vector<int>>& candidates) {
  std::map<Span, int> cluster_of;
  for (std::size_t c = 0; c < doc.gold_clusters.size(); ++c) {
    for (const Span& s : doc.gold_clusters[c]) cluster_of[s] = static_cast<int>(c);
  }
  std::vector<std::vector<int>> slots(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto self = cluster_of.find(spans[kept[i]]);
    if (self != cluster_of.end()) {
      for (std::size_t k = 0; k < candidates[i].size(); ++k) {
        auto cand = cluster_of.find(spans[kept[candidates[i][k]]]);
        if (cand != cluster_of.end() && cand->second == self->second) {
          slots[i].push_back(static_cast<int>(k) + 1);
        }
      }
    }
    if (slots[i].empty()) slots[i].push_back(0);  // the dummy antecedent
  }
  return slots;
}

}  // namespace

GoldAssignment build_gold(const Document& doc, const DocumentScores& scores) {
  GoldAssignment gold;
  gold.mention_labels = mention_labels_for(doc, scores.spans);
  std::vector<std::vector<int>> candidates(scores.rows.size());
  for (std::size_t i = 0; i < scores.rows.size(); ++i) {
    candidates[i] = scores.rows[i].candidates;
  }
  gold.gold_slots = gold_slots_for(doc, scores.spans, scores.kept, candidates);
  return gold;
}

double detection_loss(const std::vector<double>& mention_scores,
                      const std::vector<char>& labels) {
  if (mention_scores.size() != labels.size()) {
    throw ShapeMismatch("detection_loss: score/label count mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < mention_scores.size(); ++i) {
    loss += stable_softplus(mention_scores[i]) -
            (labels[i] ? mention_scores[i] : 0.0);
  }
  return loss;
}

double clustering_loss(const DocumentScores& scores, const GoldAssignment& gold) {
  if (scores.rows.size() != gold.gold_slots.size()) {
    throw ShapeMismatch("clustering_loss: row/gold count mismatch");
  }
  double loss = 0.0;
  for (std::size_t i = 0; i < scores.rows.size(); ++i) {
    std::vector<double> with_eps;
    with_eps.reserve(scores.rows[i].scores.size() + 1);
    with_eps.push_back(0.0);
    with_eps.insert(with_eps.end(), scores.rows[i].scores.begin(),
                    scores.rows[i].scores.end());
    loss += logsumexp(with_eps) - logsumexp_subset(with_eps, gold.gold_slots[i]);
  }
  return loss;
}

double total_loss(const Document& doc, const EmbeddingMatrix& emb,
                  const ModelParams& params, const TrainConfig& cfg) {
  cfg.validate();
  DocumentScores scores = score_document(doc, emb, params, ScoreOptions::from(cfg));
  GoldAssignment gold = build_gold(doc, scores);
  return cfg.detect_weight * detection_loss(scores.mention_scores, gold.mention_labels) +
         clustering_loss(scores, gold);
}

double total_loss(const std::vector<Document>& docs, const EmbeddingMap& embs,
                  const ModelParams& params, const TrainConfig& cfg) {
  double loss = 0.0;
  for (const Document& doc : docs) {
    loss += total_loss(doc, embs.at(doc.doc_id), params, cfg);
  }
  return loss;
}

namespace {

// All parameter tensors bound to one tape. The coarse bilinear matrix is
// deliberately absent: candidate selection is discrete and gets no gradient.
struct TapeModel {
  ad::VarId att_w1, att_b1, att_w2, att_b2, att_proj;
  ad::VarId men_w1, men_b1, men_w2, men_b2, men_proj;
  ad::VarId ant_w1, ant_b1, ant_w2, ant_b2, ant_proj;
  ad::VarId pron;
  ad::VarId gate_w, gate_b;
};

TapeModel bind_params(ad::Tape& tape, const ModelParams& p, ModelParams* grads) {
  auto sink = [&](std::vector<double> ModelParams::* vec) {
    return grads ? (grads->*vec).data() : nullptr;
  };
  auto bind_ffnn = [&](const Ffnn& f, Ffnn* g, ad::VarId* w1, ad::VarId* b1,
                       ad::VarId* w2, ad::VarId* b2) {
    *w1 = tape.param(f.w1.a, g ? g->w1.a.data() : nullptr);
    *b1 = tape.param(f.b1, g ? g->b1.data() : nullptr);
    *w2 = tape.param(f.w2.a, g ? g->w2.a.data() : nullptr);
    *b2 = tape.param(f.b2, g ? g->b2.data() : nullptr);
  };
  TapeModel tm;
  bind_ffnn(p.attention, grads ? &grads->attention : nullptr, &tm.att_w1,
            &tm.att_b1, &tm.att_w2, &tm.att_b2);
  tm.att_proj = tape.param(p.attention_proj, sink(&ModelParams::attention_proj));
  bind_ffnn(p.mention, grads ? &grads->mention : nullptr, &tm.men_w1, &tm.men_b1,
            &tm.men_w2, &tm.men_b2);
  tm.men_proj = tape.param(p.mention_proj, sink(&ModelParams::mention_proj));
  bind_ffnn(p.antecedent, grads ? &grads->antecedent : nullptr, &tm.ant_w1,
            &tm.ant_b1, &tm.ant_w2, &tm.ant_b2);
  tm.ant_proj = tape.param(p.antecedent_proj, sink(&ModelParams::antecedent_proj));
  tm.pron = tape.param(p.pronoun_features.a,
                       grads ? grads->pronoun_features.a.data() : nullptr);
  tm.gate_w = tape.param(p.refine_gate_w.a,
                         grads ? grads->refine_gate_w.a.data() : nullptr);
  tm.gate_b = tape.param(p.refine_gate_b, sink(&ModelParams::refine_gate_b));
  return tm;
}

// Dropout source; null when building an eval-mode (deterministic) graph.
struct TrainMode {
  double rate = 0.0;
  Rng* rng = nullptr;
};

ad::VarId tape_ffnn(ad::Tape& tape, ad::VarId w1, ad::VarId b1, ad::VarId w2,
                    ad::VarId b2, int hidden, int in_dim, ad::VarId x,
                    const TrainMode& mode) {
  ad::VarId h1 = tape.relu(tape.affine(w1, hidden, in_dim, x, b1));
  if (mode.rng != nullptr) h1 = tape.dropout(h1, mode.rate, *mode.rng);
  ad::VarId h2 = tape.relu(tape.affine(w2, hidden, hidden, h1, b2));
  if (mode.rng != nullptr) h2 = tape.dropout(h2, mode.rate, *mode.rng);
  return h2;
}

// Spans, representations, and round-0 mention scores on the tape.
struct SpanStage {
  std::vector<Span> spans;
  std::vector<ad::VarId> g;
  std::vector<ad::VarId> sm;
  std::vector<double> sm_values;
};

SpanStage build_span_stage(ad::Tape& tape, const TapeModel& tm,
                           const ModelParams& p, const Document& doc,
                           const EmbeddingMatrix& emb, int max_span_width,
                           const TrainMode& mode) {
  if (emb.rows != doc.size()) {
    throw ShapeMismatch("train: embedding rows != token count for '" +
                        doc.doc_id + "'");
  }
  int d = p.token_dim;
  int h = p.hidden;
  int g_dim = p.rep_dim();
  SpanStage stage;
  stage.spans = enumerate_spans(doc.size(), max_span_width);

  std::vector<ad::VarId> x_const(doc.size());
  std::vector<ad::VarId> alpha(doc.size());
  for (int t = 0; t < doc.size(); ++t) {
    std::span<const double> row = emb.row(t);
    x_const[t] = tape.constant(ad::Vec(row.begin(), row.end()));
    ad::VarId hid = tape_ffnn(tape, tm.att_w1, tm.att_b1, tm.att_w2, tm.att_b2, h,
                              d, x_const[t], mode);
    alpha[t] = tape.dot(hid, tm.att_proj);
  }
  stage.g.resize(stage.spans.size());
  stage.sm.resize(stage.spans.size());
  stage.sm_values.resize(stage.spans.size());
  for (std::size_t i = 0; i < stage.spans.size(); ++i) {
    const Span& s = stage.spans[i];
    std::vector<ad::VarId> alpha_slice(alpha.begin() + s.start,
                                       alpha.begin() + s.end + 1);
    ad::VarId delta = tape.softmax(tape.stack(alpha_slice));
    ad::VarId x_hat = tape.weighted_rows(
        emb.data.data() + static_cast<std::size_t>(s.start) * d, s.width(), d,
        delta);
    ad::VarId phi =
        tape.row(tm.pron, static_cast<int>(span_pronoun_type(doc, s)),
                 p.feature_dim);
    stage.g[i] = tape.concat({x_const[s.start], x_const[s.end], x_hat, phi});
    ad::VarId hid = tape_ffnn(tape, tm.men_w1, tm.men_b1, tm.men_w2, tm.men_b2, h,
                              g_dim, stage.g[i], mode);
    stage.sm[i] = tape.dot(hid, tm.men_proj);
    stage.sm_values[i] = tape.scalar_value(stage.sm[i]);
  }
  return stage;
}

ad::VarId detection_loss_tape(ad::Tape& tape, const SpanStage& stage,
                              const std::vector<char>& labels) {
  std::vector<ad::VarId> terms;
  terms.reserve(stage.sm.size());
  for (std::size_t i = 0; i < stage.sm.size(); ++i) {
    terms.push_back(tape.bce_with_logit(stage.sm[i], labels[i] ? 1.0 : 0.0));
  }
  return tape.sum(terms);
}

// Full Eq.-(8) loss for one document.
ad::VarId doc_loss_tape(ad::Tape& tape, const TapeModel& tm, const ModelParams& p,
                        const Document& doc, const EmbeddingMatrix& emb,
                        const TrainConfig& cfg, const TrainMode& mode) {
  int g_dim = p.rep_dim();
  int h = p.hidden;
  SpanStage stage =
      build_span_stage(tape, tm, p, doc, emb, cfg.max_span_width, mode);
  std::vector<char> labels = mention_labels_for(doc, stage.spans);
  ad::VarId det = detection_loss_tape(tape, stage, labels);

  // Pruning decisions run on tape values but are themselves discrete.
  std::vector<int> kept = select_top_spans(stage.sm_values, cfg.top_span_ratio);
  std::vector<ad::VarId> g_kept(kept.size());
  std::vector<ad::VarId> sm_kept(kept.size());
  std::vector<std::vector<double>> g_vals(kept.size());
  std::vector<double> sm_vals(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    g_kept[i] = stage.g[kept[i]];
    sm_kept[i] = stage.sm[kept[i]];
    g_vals[i] = tape.value(g_kept[i]);
    sm_vals[i] = stage.sm_values[kept[i]];
  }
  std::vector<std::vector<int>> candidates =
      coarse_candidates(g_vals, sm_vals, p.coarse, cfg.coarse_cap);
  std::vector<std::vector<int>> gold =
      gold_slots_for(doc, stage.spans, kept, candidates);

  auto make_score_rows = [&]() {
    std::vector<ad::VarId> rows(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      std::vector<ad::VarId> with_eps;
      with_eps.reserve(candidates[i].size() + 1);
      with_eps.push_back(tape.scalar(0.0));
      for (int j : candidates[i]) {
        std::vector<ad::VarId> pair = {g_kept[i], g_kept[j],
                                       tape.hadamard(g_kept[i], g_kept[j])};
        ad::VarId hid =
            tape_ffnn(tape, tm.ant_w1, tm.ant_b1, tm.ant_w2, tm.ant_b2, h,
                      3 * g_dim, tape.concat(pair), mode);
        ad::VarId sa = tape.dot(hid, tm.ant_proj);
        with_eps.push_back(tape.add(tape.add(sm_kept[i], sm_kept[j]), sa));
      }
      rows[i] = tape.stack(with_eps);
    }
    return rows;
  };

  std::vector<ad::VarId> rows;
  for (int round = 0;; ++round) {
    rows = make_score_rows();
    if (round >= cfg.refine_rounds) break;
    // Gated refinement; all spans update simultaneously from the old vectors.
    ad::VarId ones = tape.constant(ad::Vec(g_dim, 1.0));
    std::vector<ad::VarId> g_next(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      ad::VarId dist = tape.softmax(rows[i]);
      std::vector<ad::VarId> sources = {g_kept[i]};
      for (int j : candidates[i]) sources.push_back(g_kept[j]);
      ad::VarId a = tape.weighted_sum(dist, sources);
      ad::VarId gate_in = tape.concat({g_kept[i], a});
      ad::VarId f = tape.sigmoid(
          tape.affine(tm.gate_w, g_dim, 2 * g_dim, gate_in, tm.gate_b));
      g_next[i] = tape.add(tape.hadamard(f, g_kept[i]),
                           tape.hadamard(tape.sub(ones, f), a));
    }
    g_kept = std::move(g_next);
    for (std::size_t i = 0; i < kept.size(); ++i) {
      ad::VarId hid = tape_ffnn(tape, tm.men_w1, tm.men_b1, tm.men_w2, tm.men_b2,
                                h, g_dim, g_kept[i], mode);
      sm_kept[i] = tape.dot(hid, tm.men_proj);
    }
  }

  std::vector<ad::VarId> cluster_terms;
  cluster_terms.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    cluster_terms.push_back(
        tape.sub(tape.logsumexp(rows[i]), tape.logsumexp_subset(rows[i], gold[i])));
  }
  ad::VarId cluster = tape.sum(cluster_terms);
  return tape.add(tape.scale(det, cfg.detect_weight), cluster);
}

void zero_params(ModelParams& p) {
  for (const TensorView& t : p.tensors()) {
    std::fill(t.data->begin(), t.data->end(), 0.0);
  }
}

bool params_finite(ModelParams& p) { return p.all_finite(); }

int embedding_dim(const EmbeddingMap& embs) {
  if (embs.empty()) throw TrainError(TrainError::Kind::EmptyCorpus, "no embeddings");
  return embs.begin()->second.dim;
}

}  // namespace

ModelParams gradients(const std::vector<Document>& docs, const EmbeddingMap& embs,
                      const ModelParams& params, const TrainConfig& cfg,
                      double* loss_out) {
  cfg.validate();
  ModelParams grads = ModelParams::zeros_like(params);
  double loss = 0.0;
  for (const Document& doc : docs) {
    ad::Tape tape;
    TapeModel tm = bind_params(tape, params, &grads);
    ad::VarId loss_id = doc_loss_tape(tape, tm, params, doc, embs.at(doc.doc_id),
                                      cfg, TrainMode{});
    loss += tape.scalar_value(loss_id);
    tape.backward(loss_id);
    tape.flush_grads();
  }
  if (!std::isfinite(loss) || !params_finite(grads)) {
    throw TrainError(TrainError::Kind::NonFiniteGradient,
                     "non-finite loss or gradient");
  }
  if (loss_out != nullptr) *loss_out = loss;
  return grads;
}

double global_grad_norm(ModelParams& grads) {
  double sq = 0.0;
  for (const TensorView& t : grads.tensors()) {
    for (double v : *t.data) sq += v * v;
  }
  return std::sqrt(sq);
}

void adam_step(ModelParams& params, ModelParams& grads, AdamState& state,
               const TrainConfig& cfg) {
  double norm = global_grad_norm(grads);
  if (norm > cfg.clip_norm && norm > 0.0) {
    double scale = cfg.clip_norm / norm;
    for (const TensorView& t : grads.tensors()) {
      for (double& v : *t.data) v *= scale;
    }
  }
  ++state.step;
  double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
  std::vector<TensorView> pt = params.tensors();
  std::vector<TensorView> gt = grads.tensors();
  std::vector<TensorView> mt = state.m.tensors();
  std::vector<TensorView> vt = state.v.tensors();
  for (std::size_t k = 0; k < pt.size(); ++k) {
    std::vector<double>& p = *pt[k].data;
    std::vector<double>& g = *gt[k].data;
    std::vector<double>& m = *mt[k].data;
    std::vector<double>& v = *vt[k].data;
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
      p[i] -= cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
    }
  }
}

std::pair<std::vector<Document>, std::vector<Document>> split_corpus(
    const std::vector<Document>& docs, double dev_fraction, std::uint64_t seed) {
  if (dev_fraction < 0.0 || dev_fraction >= 1.0) {
    throw InvalidParam("split_corpus: dev_fraction must be in [0, 1)");
  }
  if (dev_fraction == 0.0) return {docs, docs};
  int n = static_cast<int>(docs.size());
  int n_dev = static_cast<int>(std::llround(dev_fraction * n));
  n_dev = std::min(n_dev, n - 1);
  if (n_dev <= 0) return {docs, docs};
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (int i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_int(0, i - 1)]);
  std::vector<int> dev_idx(order.begin(), order.begin() + n_dev);
  std::sort(dev_idx.begin(), dev_idx.end());
  std::vector<Document> train_docs, dev_docs;
  std::set<int> dev_set(dev_idx.begin(), dev_idx.end());
  for (int i = 0; i < n; ++i) {
    (dev_set.contains(i) ? dev_docs : train_docs).push_back(docs[i]);
  }
  return {train_docs, dev_docs};
}

double detector_accuracy(const std::vector<Document>& docs,
                         const EmbeddingMap& embs, const ModelParams& params,
                         int max_span_width) {
  std::int64_t hits = 0, total = 0;
  for (const Document& doc : docs) {
    const EmbeddingMatrix& emb = embs.at(doc.doc_id);
    std::vector<Span> spans = enumerate_spans(doc.size(), max_span_width);
    std::vector<char> labels = mention_labels_for(doc, spans);
    std::vector<double> alpha = token_attention_scores(emb, params);
    for (std::size_t i = 0; i < spans.size(); ++i) {
      SpanRepresentation rep =
          build_representation(doc, emb, spans[i], alpha, params);
      bool predicted = mention_score(rep.g, params) >= 0.0;  // sigmoid >= 0.5
      hits += predicted == (labels[i] != 0) ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

ModelParams pretrain_detector(const std::vector<Document>& docs,
                              const EmbeddingMap& embs, const TrainConfig& cfg,
                              int epochs) {
  cfg.validate();
  if (epochs < 0) throw InvalidParam("pretrain_detector: epochs must be >= 0");
  if (docs.empty()) {
    throw TrainError(TrainError::Kind::EmptyCorpus, "pretraining corpus is empty");
  }
  check_embeddings(docs, embs);
  ModelParams params = ModelParams::init(embedding_dim(embs), cfg.feature_dim,
                                         cfg.hidden, cfg.seed);
  AdamState state(params);
  ModelParams grads = ModelParams::zeros_like(params);
  Rng drop_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    for (const Document& doc : docs) {
      zero_params(grads);
      ad::Tape tape;
      TapeModel tm = bind_params(tape, params, &grads);
      TrainMode mode;
      if (cfg.dropout > 0.0) mode = {cfg.dropout, &drop_rng};
      SpanStage stage = build_span_stage(tape, tm, params, doc,
                                         embs.at(doc.doc_id),
                                         cfg.max_span_width, mode);
      ad::VarId loss_id =
          detection_loss_tape(tape, stage, mention_labels_for(doc, stage.spans));
      if (!std::isfinite(tape.scalar_value(loss_id))) {
        throw TrainError(TrainError::Kind::Diverged,
                         "detector pretraining loss became non-finite");
      }
      tape.backward(loss_id);
      tape.flush_grads();
      adam_step(params, grads, state, cfg);
    }
    if (!params.all_finite()) {
      throw TrainError(TrainError::Kind::Diverged,
                       "detector pretraining parameters became non-finite");
    }
  }
  return params;
}

EvalReport evaluate_model(const std::vector<Document>& docs,
                          const EmbeddingMap& embs, const ModelParams& params,
                          const ScoreOptions& opts, bool strict_nearest) {
  std::vector<DocLinks> links;
  links.reserve(docs.size());
  for (const Document& doc : docs) {
    DocumentScores scores = score_document(doc, embs.at(doc.doc_id), params, opts);
    std::vector<Span> kept_spans;
    kept_spans.reserve(scores.kept.size());
    for (int k : scores.kept) kept_spans.push_back(scores.spans[k]);
    ResolutionResult result = decode(kept_spans, scores.rows);
    links.push_back({doc.doc_id, resolve_pronouns(doc, result)});
  }
  return score_links(links, docs, strict_nearest);
}

TrainResult train(const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const EmbeddingMap& embs,
                  const TrainConfig& cfg, const ModelParams* init) {
  cfg.validate();
  if (train_docs.empty()) {
    throw TrainError(TrainError::Kind::EmptyCorpus, "training corpus is empty");
  }
  check_embeddings(train_docs, embs);
  check_embeddings(dev_docs, embs);
  int d = embedding_dim(embs);
  ModelParams params;
  if (init != nullptr) {
    params = *init;
    params.check_shapes();
    if (params.token_dim != d) {
      throw ShapeMismatch("train: checkpoint token_dim != embedding dim");
    }
  } else {
    params = ModelParams::init(d, cfg.feature_dim, cfg.hidden, cfg.seed);
  }

  AdamState state(params);  // fresh optimizer state even after pretraining
  ModelParams grads = ModelParams::zeros_like(params);
  Rng drop_rng(cfg.seed ^ 0xd1b54a32d192ed03ull);
  ScoreOptions opts = ScoreOptions::from(cfg);

  TrainResult result;
  result.params = params;
  double best_f1 = -1.0;
  int stalled = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    for (const Document& doc : train_docs) {
      zero_params(grads);
      ad::Tape tape;
      TapeModel tm = bind_params(tape, params, &grads);
      TrainMode mode;
      if (cfg.dropout > 0.0) mode = {cfg.dropout, &drop_rng};
      ad::VarId loss_id = doc_loss_tape(tape, tm, params, doc,
                                        embs.at(doc.doc_id), cfg, mode);
      if (!std::isfinite(tape.scalar_value(loss_id))) {
        throw TrainError(TrainError::Kind::Diverged,
                         "training loss became non-finite");
      }
      tape.backward(loss_id);
      tape.flush_grads();
      if (!params_finite(grads)) {
        throw TrainError(TrainError::Kind::NonFiniteGradient,
                         "non-finite gradient during training");
      }
      adam_step(params, grads, state, cfg);
    }
    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = total_loss(train_docs, embs, params, cfg);
    if (!std::isfinite(entry.train_loss)) {
      throw TrainError(TrainError::Kind::Diverged, "training loss diverged");
    }
    entry.dev = evaluate_model(dev_docs, embs, params, opts);
    result.log.push_back(entry);
    if (entry.dev.f1 > best_f1) {
      best_f1 = entry.dev.f1;
      result.params = params;
      result.best_epoch = epoch;
      stalled = 0;
    } else if (++stalled > cfg.patience) {
      break;
    }
  }
  return result;
}

std::string format_train_log(const std::vector<TrainLogEntry>& log) {
  std::ostringstream out;
  auto num = [](double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v,
                                   std::chars_format::fixed, 6);
    return std::string(buf, end);
  };
  for (const TrainLogEntry& e : log) {
    out << e.epoch << '\t' << num(e.train_loss) << '\t' << num(e.dev.precision)
        << '\t' << num(e.dev.recall) << '\t' << num(e.dev.f1) << '\n';
  }
  return out.str();
}

}  // namespace prn
