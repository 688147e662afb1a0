#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "prn/corpus.hpp"
#include "prn/resolver.hpp"

namespace prn {

struct EvalReport {
  double precision = 0.0;  // percent
  double recall = 0.0;     // percent
  double f1 = 0.0;         // percent
  std::int64_t attempted = 0;   // predicted non-dummy links
  std::int64_t correct = 0;     // links landing in the pronoun's gold cluster
  std::int64_t resolvable = 0;  // gold pronouns with a preceding same-cluster mention
  bool operator==(const EvalReport&) const = default;
};

struct DocLinks {
  std::string doc_id;
  std::vector<PronounLink> links;
  bool operator==(const DocLinks&) const = default;
};

class EvalError : public std::runtime_error {
 public:
  enum class Kind { SpanOutOfRange, UnknownDoc, DuplicatePronoun, MalformedLine };
  EvalError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

// Percentages in, percentage out; 0 when both inputs are 0.
double f1_score(double precision, double recall);

// A non-dummy link is correct when pronoun and antecedent sit in the same
// gold cluster (exact spans). With strict_nearest, only the nearest preceding
// same-cluster mention counts. Recall counts every resolvable gold pronoun in
// `gold`, whether or not predictions mention its document.
EvalReport score_links(const std::vector<DocLinks>& predicted,
                       const std::vector<Document>& gold,
                       bool strict_nearest = false);

// Fixed-width table: Model / Precision / Recall / F1, two decimals.
std::string report_table(
    const std::vector<std::pair<std::string, EvalReport>>& rows);

// Sidecar link format, one link per line:
//   doc_id <TAB> p_start <TAB> p_end <TAB> a_start <TAB> a_end
// with the two antecedent fields replaced by a single EPS for dummy links.
void write_links(const std::vector<DocLinks>& links, std::ostream& out);
void write_links_file(const std::vector<DocLinks>& links, const std::string& path);
std::vector<DocLinks> parse_links(std::istream& in);
std::vector<DocLinks> load_links_file(const std::string& path);

}  // namespace prn
