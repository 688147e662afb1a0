#include "prn/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "prn/errors.hpp"
#include "prn/rng.hpp"

namespace prn {

namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::uint32_t kMaxSide = 1u << 24;  // sanity bound on rows/dim

static_assert(std::endian::native == std::endian::little,
              "embedding and checkpoint IO assume a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

bool get_u32(std::istream& in, std::uint32_t& v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&v), 4));
}

[[noreturn]] void truncated(const std::string& what) {
  throw EmbeddingError(EmbeddingError::Kind::Truncated,
                       "embedding file truncated while reading " + what);
}

}  // namespace

std::vector<EmbeddingMatrix> load_embeddings(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) {
    throw EmbeddingError(EmbeddingError::Kind::BadMagic,
                         "not an EMB1 embedding file");
  }
  std::vector<EmbeddingMatrix> mats;
  std::set<std::string> seen;
  // records may only end at a clean boundary; a partial trailing length is
  // a truncated file, not an end marker
  while (in.peek() != std::char_traits<char>::eof()) {
    std::uint32_t id_len = 0;
    if (!get_u32(in, id_len)) truncated("document id length");
    if (id_len > kMaxSide) truncated("document id length");
    EmbeddingMatrix mat;
    mat.doc_id.resize(id_len);
    if (!in.read(mat.doc_id.data(), id_len)) truncated("document id");
    std::uint32_t rows = 0, dim = 0;
    if (!get_u32(in, rows) || !get_u32(in, dim)) truncated("matrix header");
    if (rows > kMaxSide || dim == 0 || dim > kMaxSide) {
      throw EmbeddingError(EmbeddingError::Kind::DimMismatch,
                           "implausible embedding shape for '" + mat.doc_id + "'");
    }
    if (!seen.insert(mat.doc_id).second) {
      throw EmbeddingError(EmbeddingError::Kind::DuplicateDoc,
                           "duplicate embeddings for document '" + mat.doc_id + "'");
    }
    if (!mats.empty() && static_cast<int>(dim) != mats.front().dim) {
      throw EmbeddingError(EmbeddingError::Kind::DimMismatch,
                           "embedding dimension changes at document '" +
                               mat.doc_id + "'");
    }
    mat.rows = static_cast<int>(rows);
    mat.dim = static_cast<int>(dim);
    std::size_t count = static_cast<std::size_t>(rows) * dim;
    std::vector<float> buf(count);
    if (count > 0 &&
        !in.read(reinterpret_cast<char*>(buf.data()),
                 static_cast<std::streamsize>(count * sizeof(float)))) {
      truncated("matrix data for '" + mat.doc_id + "'");
    }
    mat.data.assign(buf.begin(), buf.end());
    mats.push_back(std::move(mat));
  }
  return mats;
}

std::vector<EmbeddingMatrix> load_embeddings_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding file: " + path);
  return load_embeddings(in);
}

void write_embeddings(const std::vector<EmbeddingMatrix>& mats, std::ostream& out) {
  out.write(kMagic, 4);
  for (const EmbeddingMatrix& mat : mats) {
    if (static_cast<std::size_t>(mat.rows) * mat.dim != mat.data.size()) {
      throw ShapeMismatch("embedding matrix for '" + mat.doc_id +
                          "' has inconsistent shape");
    }
    put_u32(out, static_cast<std::uint32_t>(mat.doc_id.size()));
    out.write(mat.doc_id.data(), static_cast<std::streamsize>(mat.doc_id.size()));
    put_u32(out, static_cast<std::uint32_t>(mat.rows));
    put_u32(out, static_cast<std::uint32_t>(mat.dim));
    std::vector<float> buf(mat.data.begin(), mat.data.end());
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
}

void write_embeddings_file(const std::vector<EmbeddingMatrix>& mats,
                           const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write embedding file: " + path);
  write_embeddings(mats, out);
  if (!out) throw IoError("failed while writing embedding file: " + path);
}

EmbeddingMap to_map(std::vector<EmbeddingMatrix> mats) {
  EmbeddingMap map;
  for (EmbeddingMatrix& mat : mats) {
    std::string id = mat.doc_id;
    if (!map.emplace(id, std::move(mat)).second) {
      throw EmbeddingError(EmbeddingError::Kind::DuplicateDoc,
                           "duplicate embeddings for document '" + id + "'");
    }
  }
  return map;
}

void check_embeddings(const std::vector<Document>& docs, const EmbeddingMap& embs) {
  int dim = -1;
  for (const auto& [id, mat] : embs) {
    if (dim == -1) dim = mat.dim;
    if (mat.dim != dim) {
      throw EmbeddingError(EmbeddingError::Kind::DimMismatch,
                           "embedding dimension changes at document '" + id + "'");
    }
  }
  for (const Document& doc : docs) {
    auto it = embs.find(doc.doc_id);
    if (it == embs.end()) {
      throw EmbeddingError(EmbeddingError::Kind::MissingDoc,
                           "no embeddings for document '" + doc.doc_id + "'");
    }
    if (it->second.rows != doc.size()) {
      throw EmbeddingError(
          EmbeddingError::Kind::TokenCountMismatch,
          "document '" + doc.doc_id + "' has " + std::to_string(doc.size()) +
              " tokens but " + std::to_string(it->second.rows) +
              " embedding rows");
    }
  }
}

SegmentPlan plan_segments(int n_tokens, int max_len, int stride) {
  if (n_tokens < 0) throw InvalidParam("plan_segments: negative token count");
  if (max_len < 1) throw InvalidParam("plan_segments: max_len must be >= 1");
  if (stride < 1 || stride > max_len) {
    throw InvalidParam("plan_segments: stride must be in [1, max_len]");
  }
  SegmentPlan plan;
  plan.n_tokens = n_tokens;
  plan.max_len = max_len;
  plan.stride = stride;
  if (n_tokens == 0) return plan;
  for (int start = 0;; start += stride) {
    int end = std::min(start + max_len, n_tokens);
    plan.segments.push_back({start, end});
    if (start + max_len >= n_tokens) break;
  }
  return plan;
}

EmbeddingMatrix merge_segment_vectors(const SegmentPlan& plan,
                                      const std::vector<std::vector<double>>& per_segment,
                                      int dim) {
  if (dim < 1) throw InvalidParam("merge_segment_vectors: dim must be >= 1");
  if (per_segment.size() != plan.segments.size()) {
    throw ShapeMismatch("merge_segment_vectors: expected " +
                        std::to_string(plan.segments.size()) + " segments, got " +
                        std::to_string(per_segment.size()));
  }
  for (std::size_t s = 0; s < per_segment.size(); ++s) {
    const auto& seg = plan.segments[s];
    std::size_t want = static_cast<std::size_t>(seg.end - seg.start) * dim;
    if (per_segment[s].size() != want) {
      throw ShapeMismatch("merge_segment_vectors: segment " + std::to_string(s) +
                          " has wrong size");
    }
  }
  EmbeddingMatrix out;
  out.rows = plan.n_tokens;
  out.dim = dim;
  out.data.resize(static_cast<std::size_t>(plan.n_tokens) * dim);
  for (int t = 0; t < plan.n_tokens; ++t) {
    int best_seg = -1;
    int best_depth = -1;
    for (std::size_t s = 0; s < plan.segments.size(); ++s) {
      const auto& seg = plan.segments[s];
      if (t < seg.start || t >= seg.end) continue;
      int depth = std::min(t - seg.start, seg.end - t);
      if (depth > best_depth) {  // ties keep the earlier segment
        best_depth = depth;
        best_seg = static_cast<int>(s);
      }
    }
    const auto& seg = plan.segments[best_seg];
    const double* src =
        per_segment[best_seg].data() + static_cast<std::size_t>(t - seg.start) * dim;
    std::copy(src, src + dim, out.data.begin() + static_cast<std::size_t>(t) * dim);
  }
  return out;
}

StaticLookupEncoder::StaticLookupEncoder(
    std::map<std::string, std::vector<double>> table, int dim)
    : table_(std::move(table)), unk_(dim, 0.0), dim_(dim) {
  if (dim < 1) throw InvalidParam("StaticLookupEncoder: dim must be >= 1");
  for (const auto& [surface, vec] : table_) {
    if (static_cast<int>(vec.size()) != dim) {
      throw EmbeddingError(EmbeddingError::Kind::DimMismatch,
                           "table row for '" + surface + "' has dimension " +
                               std::to_string(vec.size()) + ", expected " +
                               std::to_string(dim));
    }
  }
}

EmbeddingMatrix StaticLookupEncoder::encode(const Document& doc) const {
  EmbeddingMatrix mat;
  mat.doc_id = doc.doc_id;
  mat.rows = doc.size();
  mat.dim = dim_;
  mat.data.reserve(static_cast<std::size_t>(mat.rows) * dim_);
  for (const Token& tok : doc.tokens) {
    auto it = table_.find(tok.surface);
    const std::vector<double>& vec = it == table_.end() ? unk_ : it->second;
    mat.data.insert(mat.data.end(), vec.begin(), vec.end());
  }
  return mat;
}

std::vector<EmbeddingMatrix> StaticLookupEncoder::encode_corpus(
    const std::vector<Document>& docs) const {
  std::vector<EmbeddingMatrix> mats;
  mats.reserve(docs.size());
  for (const Document& doc : docs) mats.push_back(encode(doc));
  return mats;
}

StaticLookupEncoder make_surface_hash_encoder(const std::vector<Document>& docs,
                                              int dim, std::uint64_t seed) {
  if (dim < 1) throw InvalidParam("make_surface_hash_encoder: dim must be >= 1");
  std::map<std::string, std::vector<double>> table;
  for (const Document& doc : docs) {
    for (const Token& tok : doc.tokens) {
      auto [it, inserted] = table.try_emplace(tok.surface);
      if (!inserted) continue;
      std::uint64_t h = fnv1a64({tok.surface.data(), tok.surface.size()});
      h ^= seed + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      Rng rng(h);
      it->second.resize(dim);
      for (double& v : it->second) {
        // Quantize through f32 so EMB1 round trips reproduce the vector.
        v = static_cast<float>(rng.uniform(-1.0, 1.0));
      }
    }
  }
  return StaticLookupEncoder(std::move(table), dim);
}

StaticLookupEncoder load_text_table(std::istream& in) {
  std::map<std::string, std::vector<double>> table;
  int dim = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string surface;
    row >> surface;
    std::vector<double> vec;
    double v = 0.0;
    while (row >> v) vec.push_back(v);
    if (surface.empty() || vec.empty() || !row.eof()) {
      throw EmbeddingError(EmbeddingError::Kind::DimMismatch,
                           "bad text embedding row at line " +
                               std::to_string(line_no));
    }
    if (dim == -1) dim = static_cast<int>(vec.size());
    if (static_cast<int>(vec.size()) != dim) {
      throw EmbeddingError(EmbeddingError::Kind::DimMismatch,
                           "text embedding row at line " + std::to_string(line_no) +
                               " has dimension " + std::to_string(vec.size()) +
                               ", expected " + std::to_string(dim));
    }
    if (!table.emplace(surface, std::move(vec)).second) {
      throw EmbeddingError(EmbeddingError::Kind::DuplicateDoc,
                           "surface '" + surface + "' repeated at line " +
                               std::to_string(line_no));
    }
  }
  if (dim == -1) {
    throw EmbeddingError(EmbeddingError::Kind::Truncated, "empty text embedding table");
  }
  return StaticLookupEncoder(std::move(table), dim);
}

StaticLookupEncoder load_text_table_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open embedding table: " + path);
  return load_text_table(in);
}

}  // namespace prn
