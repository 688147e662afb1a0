#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace prn {

enum class PronounType { None, Personal, Reflexive, Demonstrative };

// Column-3 tag for a pronoun type: "-", "PERS", "REFL", "DEM".
const char* pronoun_tag(PronounType t);
bool parse_pronoun_tag(const std::string& tag, PronounType& out);

struct Token {
  std::string surface;
  int doc_index = 0;       // 0-based position within the document
  int sentence_index = 0;  // 0-based, non-decreasing
  PronounType pronoun_type = PronounType::None;
  bool operator==(const Token&) const = default;
};

// Inclusive token range [start, end] within one document.
struct Span {
  int start = 0;
  int end = 0;
  int width() const { return end - start + 1; }
  auto operator<=>(const Span&) const = default;
};

struct Document {
  std::string doc_id;
  std::vector<Token> tokens;
  // All gold mentions (cluster members and singletons), sorted by (start, end).
  std::vector<Span> gold_mentions;
  // Coreference chains; spans sorted within a cluster, clusters sorted by
  // their first span. Clusters are disjoint and every member appears in
  // gold_mentions. Singleton mentions live only in gold_mentions.
  std::vector<std::vector<Span>> gold_clusters;

  int size() const { return static_cast<int>(tokens.size()); }
  bool in_bounds(const Span& s) const {
    return s.start >= 0 && s.start <= s.end && s.end < size();
  }
  // True when s is a single token carrying a pronoun tag.
  bool is_pronoun_span(const Span& s) const;
  // Throws CorpusError if any structural invariant is broken.
  void validate() const;
  bool operator==(const Document&) const = default;
};

struct CorpusStats {
  std::int64_t documents = 0;
  std::int64_t sentences = 0;
  std::int64_t tokens = 0;
  bool operator==(const CorpusStats&) const = default;
};

class CorpusError : public std::runtime_error {
 public:
  enum class Kind {
    MalformedLine,
    UnbalancedCorefBracket,
    OverlappingSameChainSpan,
    DuplicateSpanAcrossChains,
    InvalidDocument,
  };

  CorpusError(Kind kind, const std::string& message, int line_no = -1,
              std::string doc_id = {});

  Kind kind() const { return kind_; }
  int line_no() const { return line_no_; }  // 1-based; -1 when not tied to a line
  const std::string& doc_id() const { return doc_id_; }

 private:
  Kind kind_;
  int line_no_;
  std::string doc_id_;
};

// Parses the 4-column tab-separated corpus format. Documents are delimited by
// "#begin document (<id>)" / "#end document"; blank lines inside a document
// separate sentences. Throws CorpusError on any malformed input.
std::vector<Document> parse_conll(std::istream& in);
std::vector<Document> parse_conll_string(const std::string& text);
std::vector<Document> load_corpus(const std::string& path);

// Inverse of parse_conll for valid documents: parse(serialize(docs)) == docs.
std::string serialize_conll(const std::vector<Document>& docs);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

CorpusStats corpus_stats(const std::vector<Document>& docs);

// Deterministic toy corpus: every document contains at least one pronoun with
// a gold antecedent, plus optional second entities and singleton pronouns.
// Requires n_docs >= 1 and vocab_size >= 10 (throws InvalidParam otherwise).
std::vector<Document> generate_synthetic_corpus(std::uint64_t seed, int n_docs,
                                                int vocab_size);

}  // namespace prn
