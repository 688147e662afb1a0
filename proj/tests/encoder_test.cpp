#include <cmath>
#include <optional>
#include <sstream>

#include "doctest.h"
#include "prn/corpus.hpp"
#include "prn/encoder.hpp"
#include "prn/errors.hpp"

using namespace prn;

namespace {

EmbeddingMatrix make_matrix(const std::string& id, int rows, int dim, double base) {
  EmbeddingMatrix m;
  m.doc_id = id;
  m.rows = rows;
  m.dim = dim;
  m.data.resize(static_cast<std::size_t>(rows) * dim);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    m.data[i] = static_cast<double>(static_cast<float>(base + 0.25 * i));
  }
  return m;
}

std::string round_trip_bytes(const std::vector<EmbeddingMatrix>& mats) {
  std::ostringstream out;
  write_embeddings(mats, out);
  return out.str();
}

}  // namespace

TEST_CASE("segment plan covers long documents with overlap") {
  SegmentPlan plan = plan_segments(600, 512, 256);
  REQUIRE(plan.segments.size() == 2);
  CHECK(plan.segments[0] == SegmentRange{0, 512});
  CHECK(plan.segments[1] == SegmentRange{256, 600});

  SegmentPlan small = plan_segments(100, 512, 256);
  REQUIRE(small.segments.size() == 1);
  CHECK(small.segments[0] == SegmentRange{0, 100});

  CHECK(plan_segments(0, 512, 256).segments.empty());
  CHECK(plan_segments(512, 512, 256).segments.size() == 1);
  CHECK(plan_segments(513, 512, 256).segments.size() == 2);
  CHECK_THROWS_AS(plan_segments(10, 4, 8), InvalidParam);
}

TEST_CASE("overlap merge picks the segment where a token sits deepest") {
  SegmentPlan plan = plan_segments(600, 512, 256);
  std::vector<std::vector<double>> per_segment(2);
  per_segment[0].assign(512, 0.0);
  per_segment[1].assign(600 - 256, 1.0);
  EmbeddingMatrix merged = merge_segment_vectors(plan, per_segment, 1);

  // token 300: depth 212 in segment 0 vs 44 in segment 1
  CHECK(merged.row(300)[0] == 0.0);
  // token 500: depth 12 in segment 0 vs 100 in segment 1
  CHECK(merged.row(500)[0] == 1.0);
  CHECK(merged.row(0)[0] == 0.0);
  CHECK(merged.row(599)[0] == 1.0);

  // equal depth keeps the earlier segment: token 384 is 128 from both edges
  CHECK(std::min(384 - 0, 512 - 384) == std::min(384 - 256, 600 - 384));
  CHECK(merged.row(384)[0] == 0.0);

  per_segment[1].pop_back();
  CHECK_THROWS_AS(merge_segment_vectors(plan, per_segment, 1), ShapeMismatch);
}

TEST_CASE("embedding files round-trip byte for byte") {
  std::vector<EmbeddingMatrix> mats = {make_matrix("b", 3, 4, 0.5),
                                       make_matrix("a", 2, 4, -1.0)};
  std::string bytes = round_trip_bytes(mats);
  std::istringstream in(bytes);
  auto loaded = load_embeddings(in);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].doc_id == "b");  // record order preserved, not sorted
  CHECK(loaded == mats);
  CHECK(round_trip_bytes(loaded) == bytes);
}

TEST_CASE("embedding loader rejects damaged files") {
  std::vector<EmbeddingMatrix> mats = {make_matrix("x", 2, 3, 1.0)};
  std::string bytes = round_trip_bytes(mats);

  auto kind_of = [](const std::string& data) {
    std::istringstream in(data);
    try {
      load_embeddings(in);
      return std::optional<EmbeddingError::Kind>{};
    } catch (const EmbeddingError& e) {
      return std::optional<EmbeddingError::Kind>{e.kind()};
    }
  };

  CHECK(kind_of("EMB2" + bytes.substr(4)) == EmbeddingError::Kind::BadMagic);
  CHECK(kind_of(bytes.substr(0, bytes.size() - 2)) == EmbeddingError::Kind::Truncated);
  CHECK(kind_of(bytes.substr(0, 6)) == EmbeddingError::Kind::Truncated);

  std::vector<EmbeddingMatrix> dup = {make_matrix("x", 1, 3, 0.0),
                                      make_matrix("x", 1, 3, 0.0)};
  CHECK(kind_of(round_trip_bytes(dup)) == EmbeddingError::Kind::DuplicateDoc);

  std::vector<EmbeddingMatrix> mixed = {make_matrix("x", 1, 3, 0.0),
                                        make_matrix("y", 1, 4, 0.0)};
  std::string mixed_bytes;
  {
    std::ostringstream raw;
    write_embeddings({mixed[0]}, raw);
    std::ostringstream raw2;
    write_embeddings({mixed[1]}, raw2);
    mixed_bytes = raw.str() + raw2.str().substr(4);
  }
  CHECK(kind_of(mixed_bytes) == EmbeddingError::Kind::DimMismatch);
}

TEST_CASE("check_embeddings verifies coverage and row counts") {
  auto docs = generate_synthetic_corpus(2, 3, 30);
  StaticLookupEncoder enc = make_surface_hash_encoder(docs, 6, 2);
  EmbeddingMap embs = to_map(enc.encode_corpus(docs));
  check_embeddings(docs, embs);

  EmbeddingMap missing = embs;
  missing.erase(docs[1].doc_id);
  CHECK_THROWS_AS(check_embeddings(docs, missing), EmbeddingError);

  EmbeddingMap short_rows = embs;
  short_rows[docs[0].doc_id].rows -= 1;
  CHECK_THROWS_AS(check_embeddings(docs, short_rows), EmbeddingError);
}

TEST_CASE("surface hash encoder is deterministic per surface and seed") {
  auto docs = generate_synthetic_corpus(5, 4, 30);
  StaticLookupEncoder a = make_surface_hash_encoder(docs, 8, 40);
  StaticLookupEncoder b = make_surface_hash_encoder(docs, 8, 40);
  StaticLookupEncoder c = make_surface_hash_encoder(docs, 8, 41);

  EmbeddingMatrix ma = a.encode(docs[0]);
  CHECK(ma == b.encode(docs[0]));
  CHECK(ma != c.encode(docs[0]));
  CHECK(ma.rows == docs[0].size());
  CHECK(ma.dim == 8);

  // same surface, same vector — different surfaces (almost surely) differ
  const auto& table = a.table();
  for (const auto& [surface, vec] : table) {
    CHECK(static_cast<int>(vec.size()) == 8);
    for (double v : vec) {
      CHECK(v == static_cast<double>(static_cast<float>(v)));  // f32 grid
      CHECK(std::abs(v) <= 1.0);
    }
  }
}

TEST_CASE("lookup encoder falls back to the UNK vector") {
  std::map<std::string, std::vector<double>> table = {{"known", {1.0, 2.0}}};
  StaticLookupEncoder enc(table, 2);
  enc.unk_vector() = {9.0, 9.0};

  Document d;
  d.doc_id = "t";
  d.tokens = {{"known", 0, 0, PronounType::None},
              {"novel", 1, 0, PronounType::None}};
  EmbeddingMatrix m = enc.encode(d);
  CHECK(m.row(0)[0] == 1.0);
  CHECK(m.row(1)[0] == 9.0);
}

TEST_CASE("text tables load with an inferred dimension") {
  std::istringstream in("dog 1 2 3\ncat 4 5 6\n");
  StaticLookupEncoder enc = load_text_table(in);
  CHECK(enc.dim() == 3);
  CHECK(enc.table().at("cat") == std::vector<double>{4.0, 5.0, 6.0});

  std::istringstream ragged("dog 1 2\ncat 1\n");
  CHECK_THROWS_AS(load_text_table(ragged), EmbeddingError);
}
