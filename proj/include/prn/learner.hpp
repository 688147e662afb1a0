#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "prn/corpus.hpp"
#include "prn/encoder.hpp"
#include "prn/evaluator.hpp"
#include "prn/model.hpp"
#include "prn/scorer.hpp"
#include "prn/train_config.hpp"

namespace prn {

class TrainError : public std::runtime_error {
 public:
  enum class Kind { Diverged, EmptyCorpus, NonFiniteGradient };
  TrainError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Gold supervision aligned to one DocumentScores.
struct GoldAssignment {
  // Per enumerated span: 1 when the span exactly matches a gold mention.
  std::vector<char> mention_labels;
  // Per kept span: slot indices into the scores-with-dummy vector (slot 0 is
  // the dummy) naming gold antecedents that survived pruning; {0} when the
  // span is unclustered or every gold antecedent was pruned.
  std::vector<std::vector<int>> gold_slots;
};

GoldAssignment build_gold(const Document& doc, const DocumentScores& scores);

// Negated Eq.-(7) cross-entropy over all candidate spans (softplus form).
double detection_loss(const std::vector<double>& mention_scores,
                      const std::vector<char>& labels);
// Marginal negative log-likelihood of the gold antecedents, summed over kept
// spans.
double clustering_loss(const DocumentScores& scores, const GoldAssignment& gold);

// Eval-mode joint loss: detect_weight * detection + clustering.
double total_loss(const Document& doc, const EmbeddingMatrix& emb,
                  const ModelParams& params, const TrainConfig& cfg);
double total_loss(const std::vector<Document>& docs, const EmbeddingMap& embs,
                  const ModelParams& params, const TrainConfig& cfg);

// Analytic reverse-mode gradients of the eval-mode total loss over a batch.
ModelParams gradients(const std::vector<Document>& docs, const EmbeddingMap& embs,
                      const ModelParams& params, const TrainConfig& cfg,
                      double* loss_out = nullptr);

struct AdamState {
  ModelParams m;
  ModelParams v;
  std::int64_t step = 0;
  explicit AdamState(const ModelParams& shape)
      : m(ModelParams::zeros_like(shape)), v(ModelParams::zeros_like(shape)) {}
};

double global_grad_norm(ModelParams& grads);
// Clips to cfg.clip_norm (global L2), then applies one bias-corrected Adam
// update in place. `grads` is mutated by the clip.
void adam_step(ModelParams& params, ModelParams& grads, AdamState& state,
               const TrainConfig& cfg);

// Seeded by-document split; dev_fraction 0 reuses the whole corpus as dev.
std::pair<std::vector<Document>, std::vector<Document>> split_corpus(
    const std::vector<Document>& docs, double dev_fraction, std::uint64_t seed);

// Fraction of enumerated spans whose thresholded detector output matches the
// gold mention label.
double detector_accuracy(const std::vector<Document>& docs,
                         const EmbeddingMap& embs, const ModelParams& params,
                         int max_span_width);

// Detector-only pretraining (dropout on, per-document Adam steps). epochs may
// be 0, returning freshly initialized parameters untouched.
ModelParams pretrain_detector(const std::vector<Document>& docs,
                              const EmbeddingMap& embs, const TrainConfig& cfg,
                              int epochs);

// Pronoun-link P/R/F1 of the decoded model output against gold clusters.
EvalReport evaluate_model(const std::vector<Document>& docs,
                          const EmbeddingMap& embs, const ModelParams& params,
                          const ScoreOptions& opts, bool strict_nearest = false);

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  EvalReport dev;
};

struct TrainResult {
  ModelParams params;  // best dev-F1 parameters
  std::vector<TrainLogEntry> log;
  int best_epoch = 0;
};

// Joint training with per-document Adam steps, dropout, global-norm clipping,
// and early stopping on dev pronoun F1 (strict improvement, `patience`
// tolerated stalls, best parameters restored).
TrainResult train(const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const EmbeddingMap& embs,
                  const TrainConfig& cfg, const ModelParams* init = nullptr);

std::string format_train_log(const std::vector<TrainLogEntry>& log);

}  // namespace prn
