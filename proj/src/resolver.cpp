#include "prn/resolver.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "prn/errors.hpp"

namespace prn {

namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

ResolutionResult decode(const std::vector<Span>& kept_spans,
                        const std::vector<AntecedentRow>& rows) {
  if (kept_spans.size() != rows.size()) {
    throw ShapeMismatch("decode: span/row count mismatch");
  }
  ResolutionResult result;
  result.spans = kept_spans;
  result.best_antecedent.assign(kept_spans.size(), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const AntecedentRow& row = rows[i];
    double best_score = 0.0;  // the dummy antecedent
    int best = -1;
    for (std::size_t k = 0; k < row.candidates.size(); ++k) {
      double s = row.scores[k];
      // Strict > keeps ties on the dummy; equal real scores fall to the
      // later (nearer) candidate because candidates ascend.
      if (s > best_score || (s == best_score && best != -1)) {
        best_score = s;
        best = row.candidates[k];
      }
    }
    result.best_antecedent[i] = best;
  }

  std::vector<int> parent(kept_spans.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (std::size_t i = 0; i < result.best_antecedent.size(); ++i) {
    int j = result.best_antecedent[i];
    if (j != -1) parent[find_root(parent, static_cast<int>(i))] = find_root(parent, j);
  }
  // Clusters cover exactly the spans touched by a real link (either side).
  std::vector<char> participates(kept_spans.size(), 0);
  for (std::size_t i = 0; i < result.best_antecedent.size(); ++i) {
    int j = result.best_antecedent[i];
    if (j != -1) {
      participates[i] = 1;
      participates[j] = 1;
    }
  }
  std::map<int, std::vector<int>> components;
  for (std::size_t i = 0; i < participates.size(); ++i) {
    if (!participates[i]) continue;
    components[find_root(parent, static_cast<int>(i))].push_back(
        static_cast<int>(i));
  }
  for (auto& [root, members] : components) {
    if (members.size() >= 2) result.clusters.push_back(std::move(members));
  }
  return result;
}

std::vector<PronounLink> resolve_pronouns(const Document& doc,
                                          const ResolutionResult& result) {
  std::vector<PronounLink> links;
  for (int t = 0; t < doc.size(); ++t) {
    if (doc.tokens[t].pronoun_type == PronounType::None) continue;
    PronounLink link;
    link.pronoun = {t, t};
    auto it = std::lower_bound(result.spans.begin(), result.spans.end(),
                               link.pronoun);
    if (it != result.spans.end() && *it == link.pronoun) {
      int kept_idx = static_cast<int>(it - result.spans.begin());
      int ant = result.best_antecedent[kept_idx];
      if (ant != -1) {
        link.has_antecedent = true;
        link.antecedent = result.spans[ant];
      }
    }
    links.push_back(link);
  }
  return links;
}

std::vector<std::vector<Span>> clusters_as_spans(const ResolutionResult& result) {
  std::vector<std::vector<Span>> out;
  out.reserve(result.clusters.size());
  for (const std::vector<int>& members : result.clusters) {
    std::vector<Span> spans;
    spans.reserve(members.size());
    for (int m : members) spans.push_back(result.spans[m]);
    std::sort(spans.begin(), spans.end());
    out.push_back(std::move(spans));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

Document predicted_document(const Document& doc, const ResolutionResult& result) {
  Document pred;
  pred.doc_id = doc.doc_id;
  pred.tokens = doc.tokens;
  pred.gold_clusters = clusters_as_spans(result);
  for (const auto& cluster : pred.gold_clusters) {
    pred.gold_mentions.insert(pred.gold_mentions.end(), cluster.begin(),
                              cluster.end());
  }
  std::sort(pred.gold_mentions.begin(), pred.gold_mentions.end());
  pred.validate();
  return pred;
}

}  // namespace prn
