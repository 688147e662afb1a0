#pragma once

#include <span>
#include <vector>

#include "prn/corpus.hpp"
#include "prn/encoder.hpp"
#include "prn/model.hpp"
#include "prn/span_engine.hpp"
#include "prn/train_config.hpp"

namespace prn {

struct ScoreOptions {
  int max_span_width = 10;
  double top_span_ratio = 0.4;
  int coarse_cap = 50;
  int refine_rounds = 1;

  static ScoreOptions from(const TrainConfig& cfg) {
    return {cfg.max_span_width, cfg.top_span_ratio, cfg.coarse_cap,
            cfg.refine_rounds};
  }
  void validate() const;
};

// Candidate antecedents for one kept span. Candidates are kept-list indices,
// strictly ascending and all smaller than the owning span's kept index. The
// distribution has size candidates+1 with the dummy antecedent at slot 0.
struct AntecedentRow {
  std::vector<int> candidates;
  std::vector<double> scores;        // s(i,j) per candidate
  std::vector<double> distribution;  // P(eps), P(j_0), P(j_1), ...
};

struct DocumentScores {
  std::vector<Span> spans;             // all width-<=L candidates, (start,end) order
  std::vector<double> mention_scores;  // pre-refinement s_m for every span
  std::vector<int> kept;               // indices into spans, ascending
  std::vector<double> kept_scores;     // s_m per kept span after refinement
  std::vector<AntecedentRow> rows;     // one per kept span
};

// K = ceil(ratio * n), guarded against floating-point wobble at integers.
int top_span_count(int n, double ratio);

double mention_score(std::span<const double> g, const ModelParams& params);
double antecedent_score(std::span<const double> g_i, std::span<const double> g_j,
                        const ModelParams& params);

// s(i, j) from precomputed mention scores; j == -1 is the dummy antecedent
// and scores exactly 0. Throws OrderViolation unless j < i.
double pairwise_score(int i, int j, std::span<const double> mention_scores,
                      double antecedent_score);

// Indices of the top-ceil(ratio*n) spans by mention score, ties broken toward
// earlier/shorter spans (input must be in (start, end) order); result ascending.
std::vector<int> select_top_spans(const std::vector<double>& mention_scores,
                                  double ratio);

double coarse_score(std::span<const double> g_i, std::span<const double> g_j,
                    double sm_i, double sm_j, const Mat& coarse_w);

// For each kept span, the top-cap preceding kept spans by coarse score,
// returned in ascending kept order.
std::vector<std::vector<int>> coarse_candidates(
    const std::vector<std::vector<double>>& g_kept,
    const std::vector<double>& sm_kept, const Mat& coarse_w, int cap);

// Max-subtracted softmax over an arbitrary score vector.
std::vector<double> softmax_distribution(std::span<const double> scores);
// Distribution over {eps} + real candidates; eps score is fixed at 0.
std::vector<double> antecedent_distribution(std::span<const double> real_scores);

// One gated refinement update, applied simultaneously to every kept span.
std::vector<std::vector<double>> refine_step(
    const std::vector<std::vector<double>>& g_kept,
    const std::vector<AntecedentRow>& rows, const ModelParams& params);

DocumentScores score_document(const Document& doc, const EmbeddingMatrix& emb,
                              const ModelParams& params, const ScoreOptions& opts);

}  // namespace prn
