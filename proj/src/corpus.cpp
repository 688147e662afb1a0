#include "prn/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "prn/errors.hpp"
#include "prn/rng.hpp"

namespace prn {

namespace {

constexpr const char* kBeginPrefix = "#begin document (";
constexpr const char* kEndMarker = "#end document";

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return c >= '0' && c <= '9'; });
}

bool parse_int(const std::string& s, int& out) {
  if (!all_digits(s) || s.size() > 9) return false;
  out = std::stoi(s);
  return true;
}

// True when a and b partially overlap without nesting.
bool crossing(const Span& a, const Span& b) {
  const Span& lo = a.start <= b.start ? a : b;
  const Span& hi = a.start <= b.start ? b : a;
  return lo.start < hi.start && hi.start <= lo.end && lo.end < hi.end;
}

void check_chain_shape(const std::vector<Span>& spans, const std::string& doc_id,
                       int chain_id) {
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i] == spans[i - 1]) {
      throw CorpusError(CorpusError::Kind::OverlappingSameChainSpan,
                        "duplicate span in chain " + std::to_string(chain_id) +
                            " of document '" + doc_id + "'",
                        -1, doc_id);
    }
  }
  for (std::size_t i = 0; i < spans.size(); ++i) {
    for (std::size_t j = i + 1; j < spans.size(); ++j) {
      if (crossing(spans[i], spans[j])) {
        throw CorpusError(CorpusError::Kind::OverlappingSameChainSpan,
                          "crossing spans in chain " + std::to_string(chain_id) +
                              " of document '" + doc_id + "'",
                          -1, doc_id);
      }
    }
  }
}

struct DocBuilder {
  std::string doc_id;
  int begin_line = 0;
  std::vector<Token> tokens;
  std::map<int, std::vector<int>> open_starts;   // chain id -> stack of open positions
  std::map<int, std::vector<Span>> chain_spans;  // chain id -> mentioned spans
  int sentence_idx = 0;
  bool sentence_has_tokens = false;

  void note_blank() {
    if (sentence_has_tokens) {
      ++sentence_idx;
      sentence_has_tokens = false;
    }
  }

  void add_span(int chain, Span s) { chain_spans[chain].push_back(s); }

  Document finish(int end_line) {
    for (const auto& [chain, stack] : open_starts) {
      if (!stack.empty()) {
        throw CorpusError(CorpusError::Kind::UnbalancedCorefBracket,
                          "chain " + std::to_string(chain) +
                              " left open in document '" + doc_id + "'",
                          end_line, doc_id);
      }
    }
    Document doc;
    doc.doc_id = doc_id;
    doc.tokens = std::move(tokens);
    std::map<Span, int> owner;  // span -> chain id, for cross-chain duplicates
    for (auto& [chain, spans] : chain_spans) {
      std::sort(spans.begin(), spans.end());
      check_chain_shape(spans, doc_id, chain);
      for (const Span& s : spans) {
        auto [it, inserted] = owner.emplace(s, chain);
        if (!inserted) {
          throw CorpusError(CorpusError::Kind::DuplicateSpanAcrossChains,
                            "span appears in chains " +
                                std::to_string(it->second) + " and " +
                                std::to_string(chain) + " of document '" +
                                doc_id + "'",
                            -1, doc_id);
        }
        doc.gold_mentions.push_back(s);
      }
      if (chain != 0) doc.gold_clusters.push_back(spans);
    }
    std::sort(doc.gold_mentions.begin(), doc.gold_mentions.end());
    std::sort(doc.gold_clusters.begin(), doc.gold_clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    doc.validate();
    return doc;
  }
};

void parse_coref_field(const std::string& field, int line_no, int pos,
                       DocBuilder& doc) {
  if (field == "-") return;
  for (const std::string& seg : split(field, '|')) {
    bool opens = seg.starts_with('(');
    bool closes = seg.ends_with(')');
    std::string digits = seg.substr(opens ? 1 : 0,
                                    seg.size() - (opens ? 1 : 0) - (closes ? 1 : 0));
    int chain = 0;
    if ((!opens && !closes) || !parse_int(digits, chain)) {
      throw CorpusError(CorpusError::Kind::MalformedLine,
                        "bad coreference segment '" + seg + "'", line_no,
                        doc.doc_id);
    }
    if (opens && closes) {
      doc.add_span(chain, Span{pos, pos});
    } else if (opens) {
      doc.open_starts[chain].push_back(pos);
    } else {
      auto& stack = doc.open_starts[chain];
      if (stack.empty()) {
        throw CorpusError(CorpusError::Kind::UnbalancedCorefBracket,
                          "close without open for chain " +
                              std::to_string(chain) + " in document '" +
                              doc.doc_id + "'",
                          line_no, doc.doc_id);
      }
      doc.add_span(chain, Span{stack.back(), pos});
      stack.pop_back();
    }
  }
}

void parse_token_line(const std::string& line, int line_no, DocBuilder& doc) {
  std::vector<std::string> fields = split(line, '\t');
  if (fields.size() != 4) {
    throw CorpusError(CorpusError::Kind::MalformedLine,
                      "expected 4 tab-separated fields, got " +
                          std::to_string(fields.size()),
                      line_no, doc.doc_id);
  }
  int index = 0;
  if (!parse_int(fields[0], index) ||
      index != static_cast<int>(doc.tokens.size())) {
    throw CorpusError(CorpusError::Kind::MalformedLine,
                      "token index '" + fields[0] + "' out of sequence", line_no,
                      doc.doc_id);
  }
  if (fields[1].empty()) {
    throw CorpusError(CorpusError::Kind::MalformedLine, "empty token surface",
                      line_no, doc.doc_id);
  }
  Token tok;
  tok.surface = fields[1];
  tok.doc_index = index;
  tok.sentence_index = doc.sentence_idx;
  if (!parse_pronoun_tag(fields[2], tok.pronoun_type)) {
    throw CorpusError(CorpusError::Kind::MalformedLine,
                      "unknown pronoun tag '" + fields[2] + "'", line_no,
                      doc.doc_id);
  }
  parse_coref_field(fields[3], line_no, index, doc);
  doc.tokens.push_back(std::move(tok));
  doc.sentence_has_tokens = true;
}

}  // namespace

const char* pronoun_tag(PronounType t) {
  switch (t) {
    case PronounType::None: return "-";
    case PronounType::Personal: return "PERS";
    case PronounType::Reflexive: return "REFL";
    case PronounType::Demonstrative: return "DEM";
  }
  return "-";
}

bool parse_pronoun_tag(const std::string& tag, PronounType& out) {
  if (tag == "-") out = PronounType::None;
  else if (tag == "PERS") out = PronounType::Personal;
  else if (tag == "REFL") out = PronounType::Reflexive;
  else if (tag == "DEM") out = PronounType::Demonstrative;
  else return false;
  return true;
}

bool Document::is_pronoun_span(const Span& s) const {
  return s.start == s.end && in_bounds(s) &&
         tokens[s.start].pronoun_type != PronounType::None;
}

void Document::validate() const {
  auto fail = [&](const std::string& msg) {
    throw CorpusError(CorpusError::Kind::InvalidDocument,
                      "document '" + doc_id + "': " + msg, -1, doc_id);
  };
  if (doc_id.empty()) fail("empty doc id");
  if (doc_id.find('\n') != std::string::npos) fail("doc id contains newline");
  for (int t = 0; t < size(); ++t) {
    const Token& tok = tokens[t];
    if (tok.doc_index != t) fail("token index mismatch at " + std::to_string(t));
    if (tok.surface.empty()) fail("empty surface at " + std::to_string(t));
    if (tok.surface.find_first_of("\t\n\r") != std::string::npos) {
      fail("surface contains whitespace control character at " + std::to_string(t));
    }
    int prev = t == 0 ? 0 : tokens[t - 1].sentence_index;
    int step = tok.sentence_index - prev;
    if ((t == 0 && tok.sentence_index != 0) || (t > 0 && step != 0 && step != 1)) {
      fail("sentence index jumps at " + std::to_string(t));
    }
  }
  for (std::size_t i = 0; i < gold_mentions.size(); ++i) {
    if (!in_bounds(gold_mentions[i])) fail("mention out of bounds");
    if (i > 0 && !(gold_mentions[i - 1] < gold_mentions[i])) {
      fail("mentions not sorted or duplicated");
    }
  }
  std::set<Span> mention_set(gold_mentions.begin(), gold_mentions.end());
  std::set<Span> clustered;
  for (std::size_t c = 0; c < gold_clusters.size(); ++c) {
    const auto& cluster = gold_clusters[c];
    if (cluster.empty()) fail("empty cluster");
    for (std::size_t i = 0; i < cluster.size(); ++i) {
      if (i > 0 && !(cluster[i - 1] < cluster[i])) fail("cluster spans not sorted");
      if (!mention_set.contains(cluster[i])) fail("cluster span not a mention");
      if (!clustered.insert(cluster[i]).second) fail("clusters are not disjoint");
    }
    if (c > 0 && !(gold_clusters[c - 1].front() < cluster.front())) {
      fail("clusters not ordered by first span");
    }
    check_chain_shape(cluster, doc_id, static_cast<int>(c) + 1);
  }
}

CorpusError::CorpusError(Kind kind, const std::string& message, int line_no,
                         std::string doc_id)
    : std::runtime_error(line_no >= 0
                             ? "line " + std::to_string(line_no) + ": " + message
                             : message),
      kind_(kind),
      line_no_(line_no),
      doc_id_(std::move(doc_id)) {}

std::vector<Document> parse_conll(std::istream& in) {
  std::vector<Document> docs;
  std::set<std::string> seen_ids;
  DocBuilder doc;
  bool in_doc = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (!in_doc) {
      if (blank) continue;
      if (line.starts_with(kBeginPrefix) && line.ends_with(')')) {
        doc = DocBuilder{};
        doc.doc_id = line.substr(std::string(kBeginPrefix).size(),
                                 line.size() - std::string(kBeginPrefix).size() - 1);
        doc.begin_line = line_no;
        if (!seen_ids.insert(doc.doc_id).second) {
          throw CorpusError(CorpusError::Kind::MalformedLine,
                            "duplicate document id '" + doc.doc_id + "'", line_no,
                            doc.doc_id);
        }
        in_doc = true;
      } else {
        throw CorpusError(CorpusError::Kind::MalformedLine,
                          "expected '#begin document (<id>)'", line_no);
      }
    } else {
      if (blank) {
        doc.note_blank();
      } else if (line == kEndMarker) {
        docs.push_back(doc.finish(line_no));
        in_doc = false;
      } else if (line.starts_with('#')) {
        throw CorpusError(CorpusError::Kind::MalformedLine,
                          "unexpected directive inside document", line_no,
                          doc.doc_id);
      } else {
        parse_token_line(line, line_no, doc);
      }
    }
  }
  if (in_doc) {
    throw CorpusError(CorpusError::Kind::MalformedLine,
                      "missing '#end document' for document '" + doc.doc_id + "'",
                      line_no, doc.doc_id);
  }
  return docs;
}

std::vector<Document> parse_conll_string(const std::string& text) {
  std::istringstream in(text);
  return parse_conll(in);
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file: " + path);
  return parse_conll(in);
}

std::string serialize_conll(const std::vector<Document>& docs) {
  std::string out;
  for (const Document& doc : docs) {
    doc.validate();
    // Chain ids: clusters keep their canonical order as 1..C, singletons are 0.
    std::map<Span, int> chain_of;
    for (std::size_t c = 0; c < doc.gold_clusters.size(); ++c) {
      for (const Span& s : doc.gold_clusters[c]) {
        chain_of[s] = static_cast<int>(c) + 1;
      }
    }
    for (const Span& s : doc.gold_mentions) chain_of.try_emplace(s, 0);

    int n = doc.size();
    std::vector<std::vector<std::pair<int, int>>> opens(n), closes(n);  // (key, chain)
    std::vector<std::vector<int>> singles(n);
    for (const auto& [span, chain] : chain_of) {
      if (span.width() == 1) {
        singles[span.start].push_back(chain);
      } else {
        opens[span.start].push_back({-span.end, chain});   // longest first
        closes[span.end].push_back({-span.start, chain});  // innermost first
      }
    }
    out += kBeginPrefix + doc.doc_id + ")\n";
    for (int t = 0; t < n; ++t) {
      if (t > 0 && doc.tokens[t].sentence_index != doc.tokens[t - 1].sentence_index) {
        out += '\n';
      }
      std::sort(opens[t].begin(), opens[t].end());
      std::sort(closes[t].begin(), closes[t].end());
      std::string coref;
      auto append = [&coref](const std::string& seg) {
        if (!coref.empty()) coref += '|';
        coref += seg;
      };
      for (auto [key, chain] : opens[t]) append("(" + std::to_string(chain));
      for (int chain : singles[t]) append("(" + std::to_string(chain) + ")");
      for (auto [key, chain] : closes[t]) append(std::to_string(chain) + ")");
      if (coref.empty()) coref = "-";
      out += std::to_string(t) + '\t' + doc.tokens[t].surface + '\t' +
             pronoun_tag(doc.tokens[t].pronoun_type) + '\t' + coref + '\n';
    }
    out += kEndMarker;
    out += '\n';
  }
  return out;
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus file: " + path);
  out << serialize_conll(docs);
  if (!out) throw IoError("failed while writing corpus file: " + path);
}

CorpusStats corpus_stats(const std::vector<Document>& docs) {
  CorpusStats stats;
  stats.documents = static_cast<std::int64_t>(docs.size());
  for (const Document& doc : docs) {
    stats.tokens += doc.size();
    if (doc.size() > 0) stats.sentences += doc.tokens.back().sentence_index + 1;
  }
  return stats;
}

namespace {

// Building blocks for one synthetic document. The protagonist cluster always
// receives every personal/reflexive pronoun, so links stay learnable from
// static surface embeddings alone.
enum class Piece { Name, Pronoun, Object, Demonstrative };

}  // namespace

std::vector<Document> generate_synthetic_corpus(std::uint64_t seed, int n_docs,
                                                int vocab_size) {
  if (n_docs < 1) throw InvalidParam("generate_synthetic_corpus: n_docs must be >= 1");
  if (vocab_size < 10) {
    throw InvalidParam("generate_synthetic_corpus: vocab_size must be >= 10");
  }
  Rng rng(seed);
  std::vector<Document> docs;
  docs.reserve(n_docs);
  for (int d = 0; d < n_docs; ++d) {
    Document doc;
    doc.doc_id = "synth-" + std::to_string(d);

    int name_id = rng.uniform_int(0, std::max(3, vocab_size / 5));
    int obj_mod = rng.uniform_int(0, std::max(2, vocab_size / 8));
    int obj_head = rng.uniform_int(0, std::max(2, vocab_size / 8));
    int n_pronouns = rng.uniform_int(1, 2);
    bool with_object = rng.chance(0.5);
    bool with_dem = rng.chance(0.4);

    std::vector<Piece> pieces;
    for (int i = 0, n = rng.uniform_int(1, 2); i < n; ++i) pieces.push_back(Piece::Name);
    for (int i = 0; i < n_pronouns; ++i) pieces.push_back(Piece::Pronoun);
    if (with_object) pieces.insert(pieces.end(), 2, Piece::Object);
    if (with_dem) pieces.push_back(Piece::Demonstrative);
    for (std::size_t i = pieces.size(); i > 1; --i) {  // Fisher-Yates
      std::swap(pieces[i - 1], pieces[rng.uniform_int(0, static_cast<int>(i) - 1)]);
    }
    pieces.insert(pieces.begin(), Piece::Name);  // antecedent before any pronoun

    std::vector<Span> person_cluster, object_cluster;
    int sentence = 0;
    int clause_len = 0;
    int next_break = rng.uniform_int(5, 9);
    auto emit = [&](const std::string& surface, PronounType type) {
      Token tok;
      tok.surface = surface;
      tok.doc_index = doc.size();
      tok.sentence_index = sentence;
      tok.pronoun_type = type;
      doc.tokens.push_back(std::move(tok));
      ++clause_len;
    };
    auto emit_filler = [&](int lo, int hi) {
      for (int i = 0, n = rng.uniform_int(lo, hi); i < n; ++i) {
        emit("w" + std::to_string(rng.uniform_int(0, vocab_size - 1)),
             PronounType::None);
      }
    };
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      int at = doc.size();
      switch (pieces[p]) {
        case Piece::Name:
          emit("nam" + std::to_string(name_id), PronounType::None);
          person_cluster.push_back({at, at});
          break;
        case Piece::Pronoun:
          if (rng.chance(0.5)) {
            emit("او", PronounType::Personal);  // او
          } else {
            emit("خودش", PronounType::Reflexive);  // خودش
          }
          person_cluster.push_back({at, at});
          break;
        case Piece::Object:
          emit("obj" + std::to_string(obj_mod), PronounType::None);
          emit("thing" + std::to_string(obj_head), PronounType::None);
          object_cluster.push_back({at, at + 1});
          break;
        case Piece::Demonstrative:
          emit("این", PronounType::Demonstrative);  // این
          doc.gold_mentions.push_back({at, at});  // singleton mention
          break;
      }
      if (p + 1 < pieces.size()) {
        emit_filler(1, 3);
        if (clause_len >= next_break) {
          ++sentence;
          clause_len = 0;
          next_break = rng.uniform_int(5, 9);
        }
      }
    }
    emit_filler(0, 2);

    std::sort(person_cluster.begin(), person_cluster.end());
    std::sort(object_cluster.begin(), object_cluster.end());
    doc.gold_clusters.push_back(person_cluster);
    if (object_cluster.size() >= 2) doc.gold_clusters.push_back(object_cluster);
    std::sort(doc.gold_clusters.begin(), doc.gold_clusters.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (const auto& cluster : doc.gold_clusters) {
      doc.gold_mentions.insert(doc.gold_mentions.end(), cluster.begin(),
                               cluster.end());
    }
    std::sort(doc.gold_mentions.begin(), doc.gold_mentions.end());
    doc.validate();
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace prn
