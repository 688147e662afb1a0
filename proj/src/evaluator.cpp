#include "prn/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "prn/errors.hpp"

namespace prn {

double f1_score(double precision, double recall) {
  if (precision + recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

// span -> cluster index for one document
std::map<Span, int> cluster_index(const Document& doc) {
  std::map<Span, int> idx;
  for (std::size_t c = 0; c < doc.gold_clusters.size(); ++c) {
    for (const Span& s : doc.gold_clusters[c]) idx[s] = static_cast<int>(c);
  }
  return idx;
}

std::int64_t count_resolvable(const Document& doc) {
  std::int64_t n = 0;
  for (const auto& cluster : doc.gold_clusters) {
    for (std::size_t k = 0; k < cluster.size(); ++k) {
      // Cluster spans are sorted, so any earlier member precedes this one.
      if (k > 0 && doc.is_pronoun_span(cluster[k])) ++n;
    }
  }
  return n;
}

}  // namespace

EvalReport score_links(const std::vector<DocLinks>& predicted,
                       const std::vector<Document>& gold, bool strict_nearest) {
  std::map<std::string, const Document*> gold_by_id;
  for (const Document& doc : gold) gold_by_id[doc.doc_id] = &doc;

  EvalReport report;
  for (const Document& doc : gold) report.resolvable += count_resolvable(doc);

  for (const DocLinks& dl : predicted) {
    auto found = gold_by_id.find(dl.doc_id);
    if (found == gold_by_id.end()) {
      throw EvalError(EvalError::Kind::UnknownDoc,
                      "links reference unknown document '" + dl.doc_id + "'");
    }
    const Document& doc = *found->second;
    std::map<Span, int> clusters = cluster_index(doc);
    std::set<Span> seen;
    for (const PronounLink& link : dl.links) {
      if (!doc.in_bounds(link.pronoun) ||
          (link.has_antecedent && !doc.in_bounds(link.antecedent))) {
        throw EvalError(EvalError::Kind::SpanOutOfRange,
                        "link span out of range in document '" + dl.doc_id + "'");
      }
      if (!doc.is_pronoun_span(link.pronoun)) {
        throw EvalError(EvalError::Kind::SpanOutOfRange,
                        "link source is not a pronoun span in document '" +
                            dl.doc_id + "'");
      }
      if (!seen.insert(link.pronoun).second) {
        throw EvalError(EvalError::Kind::DuplicatePronoun,
                        "duplicate link for pronoun at " +
                            std::to_string(link.pronoun.start) + " in document '" +
                            dl.doc_id + "'");
      }
      if (!link.has_antecedent) continue;
      ++report.attempted;
      auto p_it = clusters.find(link.pronoun);
      auto a_it = clusters.find(link.antecedent);
      if (p_it == clusters.end() || a_it == clusters.end() ||
          p_it->second != a_it->second) {
        continue;
      }
      if (strict_nearest) {
        const std::vector<Span>& cluster = doc.gold_clusters[p_it->second];
        Span nearest{-1, -1};
        for (const Span& s : cluster) {
          if (s < link.pronoun) nearest = s;  // sorted: last one wins
        }
        if (!(nearest == link.antecedent)) continue;
      } else if (!(link.antecedent < link.pronoun)) {
        continue;  // same cluster but not actually preceding
      }
      ++report.correct;
    }
  }
  if (report.attempted > 0) {
    report.precision = 100.0 * static_cast<double>(report.correct) /
                       static_cast<double>(report.attempted);
  }
  if (report.resolvable > 0) {
    report.recall = 100.0 * static_cast<double>(report.correct) /
                    static_cast<double>(report.resolvable);
  }
  report.f1 = f1_score(report.precision, report.recall);
  return report;
}

std::string report_table(
    const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t name_width = 5;  // "Model"
  for (const auto& [name, report] : rows) name_width = std::max(name_width, name.size());
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-*s  %9s  %9s  %9s\n",
                static_cast<int>(name_width), "Model", "Precision", "Recall", "F1");
  out << buf;
  for (const auto& [name, report] : rows) {
    std::snprintf(buf, sizeof buf, "%-*s  %9.2f  %9.2f  %9.2f\n",
                  static_cast<int>(name_width), name.c_str(), report.precision,
                  report.recall, report.f1);
    out << buf;
  }
  return out.str();
}

void write_links(const std::vector<DocLinks>& links, std::ostream& out) {
  for (const DocLinks& dl : links) {
    for (const PronounLink& link : dl.links) {
      out << dl.doc_id << '\t' << link.pronoun.start << '\t' << link.pronoun.end;
      if (link.has_antecedent) {
        out << '\t' << link.antecedent.start << '\t' << link.antecedent.end;
      } else {
        out << "\tEPS";
      }
      out << '\n';
    }
  }
}

void write_links_file(const std::vector<DocLinks>& links, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write links file: " + path);
  write_links(links, out);
  if (!out) throw IoError("failed while writing links file: " + path);
}

namespace {

int parse_link_int(const std::string& field, int line_no) {
  if (field.empty() ||
      !std::all_of(field.begin(), field.end(),
                   [](unsigned char c) { return c >= '0' && c <= '9'; }) ||
      field.size() > 9) {
    throw EvalError(EvalError::Kind::MalformedLine,
                    "links line " + std::to_string(line_no) +
                        ": bad index '" + field + "'");
  }
  return std::stoi(field);
}

}  // namespace

std::vector<DocLinks> parse_links(std::istream& in) {
  std::vector<DocLinks> out;
  std::map<std::string, std::size_t> index;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      std::size_t tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    PronounLink link;
    if (fields.size() == 4 && fields[3] == "EPS") {
      link.has_antecedent = false;
    } else if (fields.size() == 5) {
      link.has_antecedent = true;
      link.antecedent = {parse_link_int(fields[3], line_no),
                         parse_link_int(fields[4], line_no)};
    } else {
      throw EvalError(EvalError::Kind::MalformedLine,
                      "links line " + std::to_string(line_no) +
                          ": expected 4 fields ending in EPS or 5 fields");
    }
    link.pronoun = {parse_link_int(fields[1], line_no),
                    parse_link_int(fields[2], line_no)};
    auto [it, inserted] = index.try_emplace(fields[0], out.size());
    if (inserted) out.push_back({fields[0], {}});
    out[it->second].links.push_back(link);
  }
  return out;
}

std::vector<DocLinks> load_links_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open links file: " + path);
  return parse_links(in);
}

}  // namespace prn
