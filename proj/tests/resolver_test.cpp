#include <numeric>
#include <vector>

#include "doctest.h"
#include "prn/errors.hpp"
#include "prn/resolver.hpp"
#include "prn/rng.hpp"

using namespace prn;

namespace {

AntecedentRow row(std::vector<int> candidates, std::vector<double> scores) {
  AntecedentRow r;
  r.candidates = std::move(candidates);
  r.scores = std::move(scores);
  r.distribution.assign(r.candidates.size() + 1, 0.0);  // decode ignores it
  return r;
}

std::vector<Span> width_one_spans(int n) {
  std::vector<Span> spans;
  for (int i = 0; i < n; ++i) spans.push_back({i, i});
  return spans;
}

// Independent union-find oracle over the chosen links.
std::vector<std::vector<int>> closure(const std::vector<int>& best) {
  int n = static_cast<int>(best.size());
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int x) {
    while (root[x] != x) x = root[x];
    return x;
  };
  for (int i = 0; i < n; ++i) {
    if (best[i] != -1) root[find(i)] = find(best[i]);
  }
  // spans participate if they sit on either side of a real link
  std::vector<char> present(n, 0);
  for (int i = 0; i < n; ++i) {
    if (best[i] != -1) present[i] = present[best[i]] = 1;
  }
  std::vector<std::vector<int>> out(n);
  for (int i = 0; i < n; ++i) {
    if (present[i]) out[find(i)].push_back(i);
  }
  std::vector<std::vector<int>> result;
  for (auto& g : out) {
    if (g.size() >= 2) result.push_back(std::move(g));
  }
  return result;
}

}  // namespace

TEST_CASE("decode picks the argmax and prefers the dummy on ties") {
  std::vector<Span> spans = width_one_spans(4);
  std::vector<AntecedentRow> rows(4);
  rows[0] = row({}, {});
  rows[1] = row({0}, {1.5});
  rows[2] = row({0, 1}, {0.0, 0.0});    // ties with the dummy: stay dummy
  rows[3] = row({0, 1, 2}, {2.0, 3.0, -1.0});

  ResolutionResult res = decode(spans, rows);
  CHECK(res.best_antecedent == std::vector<int>{-1, 0, -1, 1});
  REQUIRE(res.clusters.size() == 1);
  CHECK(res.clusters[0] == std::vector<int>{0, 1, 3});
}

TEST_CASE("equal positive scores fall to the nearer candidate") {
  std::vector<Span> spans = width_one_spans(3);
  std::vector<AntecedentRow> rows(3);
  rows[0] = row({}, {});
  rows[1] = row({}, {});
  rows[2] = row({0, 1}, {0.75, 0.75});
  ResolutionResult res = decode(spans, rows);
  CHECK(res.best_antecedent[2] == 1);  // candidate 1 is nearer than 0
}

TEST_CASE("all-negative scores resolve everything to the dummy") {
  std::vector<Span> spans = width_one_spans(5);
  std::vector<AntecedentRow> rows(5);
  rows[0] = row({}, {});
  for (int i = 1; i < 5; ++i) {
    std::vector<int> cands(i);
    std::iota(cands.begin(), cands.end(), 0);
    std::vector<double> scores(i, -0.25 * i);
    rows[i] = row(cands, scores);
  }
  ResolutionResult res = decode(spans, rows);
  for (int b : res.best_antecedent) CHECK(b == -1);
  CHECK(res.clusters.empty());
}

TEST_CASE("decoded clusters match an independent transitive closure") {
  Rng rng(802);
  for (int trial = 0; trial < 25; ++trial) {
    int n = rng.uniform_int(2, 9);
    std::vector<Span> spans = width_one_spans(n);
    std::vector<AntecedentRow> rows(n);
    for (int i = 0; i < n; ++i) {
      std::vector<int> cands;
      std::vector<double> scores;
      for (int j = 0; j < i; ++j) {
        if (rng.chance(0.7)) {
          cands.push_back(j);
          scores.push_back(rng.uniform(-2.0, 2.0));
        }
      }
      rows[i] = row(cands, scores);
    }
    ResolutionResult res = decode(spans, rows);
    CHECK(res.clusters == closure(res.best_antecedent));
    for (std::size_t i = 0; i < res.best_antecedent.size(); ++i) {
      int b = res.best_antecedent[i];
      if (b != -1) CHECK(b < static_cast<int>(i));
    }
  }
}

TEST_CASE("decode validates its input shape") {
  CHECK_THROWS_AS(decode(width_one_spans(2), std::vector<AntecedentRow>(3)),
                  ShapeMismatch);
}

TEST_CASE("resolve_pronouns covers every pronoun token exactly once") {
  Document doc;
  doc.doc_id = "p";
  doc.tokens = {{"Ann", 0, 0, PronounType::None},
                {"she", 1, 0, PronounType::Personal},
                {"met", 2, 0, PronounType::None},
                {"them", 3, 0, PronounType::Personal},
                {"herself", 4, 0, PronounType::Reflexive}};

  // kept spans skip (3,3): that pronoun was pruned away
  std::vector<Span> kept = {{0, 0}, {1, 1}, {4, 4}};
  std::vector<AntecedentRow> rows(3);
  rows[0] = row({}, {});
  rows[1] = row({0}, {2.0});
  rows[2] = row({0, 1}, {-1.0, -1.0});
  ResolutionResult res = decode(kept, rows);

  std::vector<PronounLink> links = resolve_pronouns(doc, res);
  REQUIRE(links.size() == 3);  // tokens 1, 3, 4 in order
  CHECK(links[0].pronoun == Span{1, 1});
  CHECK(links[0].has_antecedent);
  CHECK(links[0].antecedent == Span{0, 0});
  CHECK(links[1].pronoun == Span{3, 3});
  CHECK_FALSE(links[1].has_antecedent);  // pruned -> dummy
  CHECK(links[2].pronoun == Span{4, 4});
  CHECK_FALSE(links[2].has_antecedent);  // kept but resolved to dummy
}

TEST_CASE("clusters_as_spans and predicted_document rebuild span clusters") {
  std::vector<Span> kept = {{0, 0}, {1, 2}, {3, 3}, {5, 5}};
  std::vector<AntecedentRow> rows(4);
  rows[0] = row({}, {});
  rows[1] = row({0}, {1.0});
  rows[2] = row({0, 1}, {-5.0, -5.0});
  rows[3] = row({0, 1, 2}, {-1.0, 4.0, -1.0});
  ResolutionResult res = decode(kept, rows);

  std::vector<std::vector<Span>> clusters = clusters_as_spans(res);
  REQUIRE(clusters.size() == 1);
  CHECK(clusters[0] == std::vector<Span>{{0, 0}, {1, 2}, {5, 5}});

  Document doc;
  doc.doc_id = "c";
  for (int i = 0; i < 6; ++i) {
    doc.tokens.push_back({"w" + std::to_string(i), i, 0, PronounType::None});
  }
  Document pred = predicted_document(doc, res);
  CHECK(pred.doc_id == "c");
  CHECK(pred.tokens == doc.tokens);
  CHECK(pred.gold_clusters == std::vector<std::vector<Span>>{clusters[0]});
  CHECK(pred.gold_mentions == std::vector<Span>{{0, 0}, {1, 2}, {5, 5}});
  CHECK_NOTHROW(pred.validate());
}
