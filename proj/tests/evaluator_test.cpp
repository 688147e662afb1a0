#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "prn/errors.hpp"
#include "prn/evaluator.hpp"

using namespace prn;

namespace {

// A two-sentence document: "Ann met Bob . She liked him ."
// Chains: {Ann, She} and {Bob, him}.
Document two_chain_doc() {
  Document doc;
  doc.doc_id = "story";
  doc.tokens = {{"Ann", 0, 0, PronounType::None},
                {"met", 1, 0, PronounType::None},
                {"Bob", 2, 0, PronounType::None},
                {".", 3, 0, PronounType::None},
                {"She", 4, 1, PronounType::Personal},
                {"liked", 5, 1, PronounType::None},
                {"him", 6, 1, PronounType::Personal},
                {".", 7, 1, PronounType::None}};
  doc.gold_mentions = {{0, 0}, {2, 2}, {4, 4}, {6, 6}};
  doc.gold_clusters = {{{0, 0}, {4, 4}}, {{2, 2}, {6, 6}}};
  doc.validate();
  return doc;
}

PronounLink to(Span pronoun, Span antecedent) {
  return {pronoun, true, antecedent};
}

PronounLink dummy(Span pronoun) { return {pronoun, false, {}}; }

}  // namespace

TEST_CASE("f1_score reproduces the published two-decimal table") {
  struct Row {
    double p, r, f1;
  };
  // (P, R) -> F1 pairs verified by hand against the harmonic mean
  std::vector<Row> rows = {
      {68.91, 67.35, 68.12}, {62.16, 59.96, 61.04}, {60.47, 59.88, 60.17},
      {71.12, 70.06, 70.59}, {55.00, 55.00, 55.00}, {100.0, 100.0, 100.0},
  };
  for (const Row& row : rows) {
    CHECK(f1_score(row.p, row.r) == doctest::Approx(row.f1).scale(0).epsilon(0.005));
  }
  CHECK(f1_score(0.0, 0.0) == 0.0);
  CHECK(f1_score(0.0, 80.0) == 0.0);
  CHECK(f1_score(100.0, 0.0) == 0.0);
}

TEST_CASE("f1 stays between precision and recall") {
  for (double p = 5.0; p <= 95.0; p += 17.0) {
    for (double r = 3.0; r <= 99.0; r += 13.0) {
      double f = f1_score(p, r);
      CHECK(f >= std::min(p, r) - 1e-9);
      CHECK(f <= std::max(p, r) + 1e-9);
      CHECK(f == doctest::Approx(f1_score(r, p)).epsilon(1e-12));  // symmetric
    }
  }
}

TEST_CASE("score_links counts same-cluster links as correct") {
  Document doc = two_chain_doc();
  DocLinks links;
  links.doc_id = "story";
  links.links = {to({4, 4}, {0, 0}),   // She -> Ann: correct
                 to({6, 6}, {0, 0})};  // him -> Ann: wrong cluster

  EvalReport rep = score_links({links}, {doc});
  CHECK(rep.attempted == 2);
  CHECK(rep.correct == 1);
  CHECK(rep.resolvable == 2);
  CHECK(rep.precision == doctest::Approx(50.0));
  CHECK(rep.recall == doctest::Approx(50.0));
  CHECK(rep.f1 == doctest::Approx(50.0));
}

TEST_CASE("dummy links cost recall but never precision") {
  Document doc = two_chain_doc();
  DocLinks links;
  links.doc_id = "story";
  links.links = {to({4, 4}, {0, 0}), dummy({6, 6})};
  EvalReport rep = score_links({links}, {doc});
  CHECK(rep.attempted == 1);
  CHECK(rep.correct == 1);
  CHECK(rep.precision == doctest::Approx(100.0));
  CHECK(rep.recall == doctest::Approx(50.0));
}

TEST_CASE("recall covers gold documents missing from the predictions") {
  Document doc = two_chain_doc();
  EvalReport rep = score_links({}, {doc});
  CHECK(rep.attempted == 0);
  CHECK(rep.resolvable == 2);
  CHECK(rep.precision == 0.0);
  CHECK(rep.recall == 0.0);
  CHECK(rep.f1 == 0.0);
}

TEST_CASE("an antecedent that does not precede the pronoun is wrong") {
  Document doc = two_chain_doc();
  DocLinks links;
  links.doc_id = "story";
  // cataphora: She -> She is in-cluster by span lookup but not preceding
  links.links = {to({4, 4}, {4, 4})};
  EvalReport rep = score_links({links}, {doc});
  CHECK(rep.attempted == 1);
  CHECK(rep.correct == 0);
}

TEST_CASE("strict_nearest only accepts the closest preceding mention") {
  Document doc;
  doc.doc_id = "n";
  doc.tokens = {{"Ann", 0, 0, PronounType::None},
                {"Ann", 1, 0, PronounType::None},
                {"she", 2, 0, PronounType::Personal}};
  doc.gold_mentions = {{0, 0}, {1, 1}, {2, 2}};
  doc.gold_clusters = {{{0, 0}, {1, 1}, {2, 2}}};
  doc.validate();

  DocLinks far;
  far.doc_id = "n";
  far.links = {to({2, 2}, {0, 0})};
  CHECK(score_links({far}, {doc}, false).correct == 1);
  CHECK(score_links({far}, {doc}, true).correct == 0);

  DocLinks near;
  near.doc_id = "n";
  near.links = {to({2, 2}, {1, 1})};
  CHECK(score_links({near}, {doc}, true).correct == 1);
}

TEST_CASE("resolvable counts only pronouns with a preceding cluster mate") {
  Document doc;
  doc.doc_id = "r";
  doc.tokens = {{"It", 0, 0, PronounType::Personal},
                {"rained", 1, 0, PronounType::None},
                {"on", 2, 0, PronounType::None},
                {"Ann", 3, 0, PronounType::None}};
  // the pronoun opens its own chain, so nothing precedes it
  doc.gold_mentions = {{0, 0}, {3, 3}};
  doc.gold_clusters = {{{0, 0}, {3, 3}}};
  doc.validate();
  EvalReport rep = score_links({}, {doc});
  CHECK(rep.resolvable == 0);

  // a singleton pronoun is never resolvable either
  Document single = two_chain_doc();
  single.gold_clusters.clear();
  single.gold_mentions = {{4, 4}};
  single.validate();
  CHECK(score_links({}, {single}).resolvable == 0);
}

TEST_CASE("score_links rejects malformed predictions") {
  Document doc = two_chain_doc();

  DocLinks unknown;
  unknown.doc_id = "elsewhere";
  unknown.links = {dummy({4, 4})};
  CHECK_THROWS_AS(score_links({unknown}, {doc}), EvalError);

  DocLinks dup;
  dup.doc_id = "story";
  dup.links = {dummy({4, 4}), to({4, 4}, {0, 0})};
  try {
    score_links({dup}, {doc});
    FAIL("expected duplicate pronoun error");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalError::Kind::DuplicatePronoun);
  }

  DocLinks range;
  range.doc_id = "story";
  range.links = {to({4, 4}, {7, 9})};
  try {
    score_links({range}, {doc});
    FAIL("expected span range error");
  } catch (const EvalError& e) {
    CHECK(e.kind() == EvalError::Kind::SpanOutOfRange);
  }

  DocLinks notpron;
  notpron.doc_id = "story";
  notpron.links = {dummy({1, 1})};  // "met" carries no pronoun tag
  CHECK_THROWS_AS(score_links({notpron}, {doc}), EvalError);
}

TEST_CASE("links files round-trip including dummy rows") {
  std::vector<DocLinks> links(2);
  links[0].doc_id = "a";
  links[0].links = {to({4, 4}, {0, 1}), dummy({6, 6})};
  links[1].doc_id = "b";
  links[1].links = {dummy({0, 0})};

  std::ostringstream out;
  write_links(links, out);
  CHECK(out.str() ==
        "a\t4\t4\t0\t1\n"
        "a\t6\t6\tEPS\n"
        "b\t0\t0\tEPS\n");

  std::istringstream in(out.str());
  CHECK(parse_links(in) == links);
}

TEST_CASE("parse_links merges split blocks and rejects junk") {
  std::istringstream in(
      "a\t1\t1\t0\t0\n"
      "b\t2\t2\tEPS\n"
      "a\t3\t3\tEPS\n");
  std::vector<DocLinks> got = parse_links(in);
  REQUIRE(got.size() == 2);  // "a" rows merge even across the "b" row
  CHECK(got[0].doc_id == "a");
  CHECK(got[0].links.size() == 2);
  CHECK(got[1].doc_id == "b");

  std::istringstream bad("a\t1\t1\n");
  CHECK_THROWS_AS(parse_links(bad), EvalError);
  std::istringstream bad2("a\t1\tx\tEPS\n");
  CHECK_THROWS_AS(parse_links(bad2), EvalError);
  std::istringstream bad3("a\t1\t1\t2\t2\t9\n");
  CHECK_THROWS_AS(parse_links(bad3), EvalError);

  std::istringstream empty("");
  CHECK(parse_links(empty).empty());
}

TEST_CASE("report_table lines up models in fixed columns") {
  EvalReport a;
  a.precision = 68.91;
  a.recall = 67.35;
  a.f1 = 68.12;
  EvalReport b;
  b.precision = 100.0;
  b.recall = 2.5;
  b.f1 = f1_score(100.0, 2.5);
  std::string table = report_table({{"ours", a}, {"longer-name", b}});
  CHECK(table ==
        "Model        Precision     Recall         F1\n"
        "ours             68.91      67.35      68.12\n"
        "longer-name     100.00       2.50       4.88\n");
}
