#pragma once

#include <vector>

#include "prn/corpus.hpp"
#include "prn/scorer.hpp"

namespace prn {

// Greedy decode output over one document's kept spans.
struct ResolutionResult {
  std::vector<Span> spans;           // kept spans, document order
  std::vector<int> best_antecedent;  // kept index, or -1 for the dummy
  // Connected components of non-dummy links; kept indices, each size >= 2,
  // ordered by first member.
  std::vector<std::vector<int>> clusters;
};

// Argmax antecedent per span (dummy scores 0); ties prefer the dummy, then
// the nearer candidate. Clusters are the transitive closure of real links.
ResolutionResult decode(const std::vector<Span>& kept_spans,
                        const std::vector<AntecedentRow>& rows);

// One entry per pronoun token in the document, in token order. Pronouns whose
// exact span was pruned away resolve to the dummy.
struct PronounLink {
  Span pronoun;
  bool has_antecedent = false;
  Span antecedent;  // meaningful only when has_antecedent
  bool operator==(const PronounLink&) const = default;
};

std::vector<PronounLink> resolve_pronouns(const Document& doc,
                                          const ResolutionResult& result);

std::vector<std::vector<Span>> clusters_as_spans(const ResolutionResult& result);

// Copy of doc whose gold annotation is replaced by the predicted clusters
// (cluster members only; no predicted singletons).
Document predicted_document(const Document& doc, const ResolutionResult& result);

}  // namespace prn
