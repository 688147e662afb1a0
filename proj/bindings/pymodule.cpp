#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "prn/corpus.hpp"
#include "prn/encoder.hpp"
#include "prn/evaluator.hpp"
#include "prn/learner.hpp"
#include "prn/model.hpp"
#include "prn/resolver.hpp"
#include "prn/scorer.hpp"
#include "prn/train_config.hpp"

namespace py = pybind11;
using namespace prn;

namespace {

EmbeddingMap as_map(const std::vector<EmbeddingMatrix>& mats) {
  return to_map(std::vector<EmbeddingMatrix>(mats));
}

std::vector<PronounLink> resolve_document(const Document& doc,
                                          const EmbeddingMatrix& emb,
                                          const ModelParams& params,
                                          const ScoreOptions& opts) {
  DocumentScores scores = score_document(doc, emb, params, opts);
  std::vector<Span> kept;
  kept.reserve(scores.kept.size());
  for (int k : scores.kept) kept.push_back(scores.spans[k]);
  return resolve_pronouns(doc, decode(kept, scores.rows));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Span-based pronoun resolution core";

  py::enum_<PronounType>(m, "PronounType")
      .value("NONE", PronounType::None)
      .value("PERSONAL", PronounType::Personal)
      .value("REFLEXIVE", PronounType::Reflexive)
      .value("DEMONSTRATIVE", PronounType::Demonstrative);

  py::class_<Span>(m, "Span")
      .def(py::init([](int start, int end) { return Span{start, end}; }),
           py::arg("start"), py::arg("end"))
      .def_readwrite("start", &Span::start)
      .def_readwrite("end", &Span::end)
      .def("width", &Span::width)
      .def(py::self == py::self)
      .def("__repr__", [](const Span& s) {
        return "Span(" + std::to_string(s.start) + ", " + std::to_string(s.end) + ")";
      });

  py::class_<Token>(m, "Token")
      .def_readwrite("surface", &Token::surface)
      .def_readwrite("doc_index", &Token::doc_index)
      .def_readwrite("sentence_index", &Token::sentence_index)
      .def_readwrite("pronoun_type", &Token::pronoun_type);

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def_readwrite("doc_id", &Document::doc_id)
      .def_readwrite("tokens", &Document::tokens)
      .def_readwrite("gold_mentions", &Document::gold_mentions)
      .def_readwrite("gold_clusters", &Document::gold_clusters)
      .def("size", &Document::size)
      .def("validate", &Document::validate);

  py::class_<CorpusStats>(m, "CorpusStats")
      .def_readonly("documents", &CorpusStats::documents)
      .def_readonly("sentences", &CorpusStats::sentences)
      .def_readonly("tokens", &CorpusStats::tokens);

  m.def("parse_conll", &parse_conll_string, py::arg("text"));
  m.def("serialize_conll", &serialize_conll, py::arg("docs"));
  m.def("load_corpus", &load_corpus, py::arg("path"));
  m.def("save_corpus", &save_corpus, py::arg("docs"), py::arg("path"));
  m.def("corpus_stats", &corpus_stats, py::arg("docs"));
  m.def("synthetic_corpus", &generate_synthetic_corpus, py::arg("seed"),
        py::arg("n_docs"), py::arg("vocab_size") = 50);

  py::class_<EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def(py::init<>())
      .def_readwrite("doc_id", &EmbeddingMatrix::doc_id)
      .def_readwrite("rows", &EmbeddingMatrix::rows)
      .def_readwrite("dim", &EmbeddingMatrix::dim)
      .def_readwrite("data", &EmbeddingMatrix::data);

  m.def("load_embeddings", &load_embeddings_file, py::arg("path"));
  m.def("write_embeddings", &write_embeddings_file, py::arg("matrices"),
        py::arg("path"));
  m.def(
      "hash_embeddings",
      [](const std::vector<Document>& docs, int dim, std::uint64_t seed) {
        return make_surface_hash_encoder(docs, dim, seed).encode_corpus(docs);
      },
      py::arg("docs"), py::arg("dim"), py::arg("seed"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("max_span_width", &TrainConfig::max_span_width)
      .def_readwrite("top_span_ratio", &TrainConfig::top_span_ratio)
      .def_readwrite("detect_weight", &TrainConfig::detect_weight)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("learning_rate", &TrainConfig::learning_rate)
      .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
      .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
      .def_readwrite("adam_eps", &TrainConfig::adam_eps)
      .def_readwrite("clip_norm", &TrainConfig::clip_norm)
      .def_readwrite("patience", &TrainConfig::patience)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("hidden", &TrainConfig::hidden)
      .def_readwrite("feature_dim", &TrainConfig::feature_dim)
      .def_readwrite("dropout", &TrainConfig::dropout)
      .def_readwrite("refine_rounds", &TrainConfig::refine_rounds)
      .def_readwrite("coarse_cap", &TrainConfig::coarse_cap)
      .def_readwrite("dev_fraction", &TrainConfig::dev_fraction)
      .def("validate", &TrainConfig::validate);

  py::class_<ScoreOptions>(m, "ScoreOptions")
      .def(py::init<>())
      .def_static("from_config", &ScoreOptions::from, py::arg("config"))
      .def_readwrite("max_span_width", &ScoreOptions::max_span_width)
      .def_readwrite("top_span_ratio", &ScoreOptions::top_span_ratio)
      .def_readwrite("coarse_cap", &ScoreOptions::coarse_cap)
      .def_readwrite("refine_rounds", &ScoreOptions::refine_rounds);

  py::class_<ModelParams>(m, "ModelParams")
      .def_readonly("token_dim", &ModelParams::token_dim)
      .def_readonly("feature_dim", &ModelParams::feature_dim)
      .def_readonly("hidden", &ModelParams::hidden)
      .def(py::self == py::self);

  m.def("init_params", &ModelParams::init, py::arg("token_dim"),
        py::arg("feature_dim"), py::arg("hidden"), py::arg("seed"));
  m.def(
      "save_checkpoint",
      [](const ModelParams& p, const TrainConfig& c, const std::string& path) {
        save_checkpoint_file(p, c, path);
      },
      py::arg("params"), py::arg("config"), py::arg("path"));
  m.def(
      "load_checkpoint",
      [](const std::string& path) {
        TrainConfig cfg;
        ModelParams p = load_checkpoint_file(path, &cfg);
        return py::make_tuple(p, cfg);
      },
      py::arg("path"));

  py::class_<PronounLink>(m, "PronounLink")
      .def_readwrite("pronoun", &PronounLink::pronoun)
      .def_readwrite("has_antecedent", &PronounLink::has_antecedent)
      .def_readwrite("antecedent", &PronounLink::antecedent);

  py::class_<DocLinks>(m, "DocLinks")
      .def(py::init<>())
      .def_readwrite("doc_id", &DocLinks::doc_id)
      .def_readwrite("links", &DocLinks::links);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("precision", &EvalReport::precision)
      .def_readonly("recall", &EvalReport::recall)
      .def_readonly("f1", &EvalReport::f1)
      .def_readonly("attempted", &EvalReport::attempted)
      .def_readonly("correct", &EvalReport::correct)
      .def_readonly("resolvable", &EvalReport::resolvable);

  py::class_<TrainLogEntry>(m, "TrainLogEntry")
      .def_readonly("epoch", &TrainLogEntry::epoch)
      .def_readonly("train_loss", &TrainLogEntry::train_loss)
      .def_readonly("dev", &TrainLogEntry::dev);

  py::class_<TrainResult>(m, "TrainResult")
      .def_readonly("params", &TrainResult::params)
      .def_readonly("log", &TrainResult::log)
      .def_readonly("best_epoch", &TrainResult::best_epoch);

  m.def(
      "pretrain_detector",
      [](const std::vector<Document>& docs,
         const std::vector<EmbeddingMatrix>& embs, const TrainConfig& cfg,
         int epochs) { return pretrain_detector(docs, as_map(embs), cfg, epochs); },
      py::arg("docs"), py::arg("embeddings"), py::arg("config"), py::arg("epochs"));
  m.def(
      "train",
      [](const std::vector<Document>& train_docs,
         const std::vector<Document>& dev_docs,
         const std::vector<EmbeddingMatrix>& embs, const TrainConfig& cfg,
         const ModelParams* init) {
        return train(train_docs, dev_docs, as_map(embs), cfg, init);
      },
      py::arg("train_docs"), py::arg("dev_docs"), py::arg("embeddings"),
      py::arg("config"), py::arg("init") = nullptr);
  m.def("split_corpus", &split_corpus, py::arg("docs"), py::arg("dev_fraction"),
        py::arg("seed"));
  m.def("resolve_document", &resolve_document, py::arg("doc"), py::arg("embedding"),
        py::arg("params"), py::arg("options"));
  m.def(
      "evaluate_model",
      [](const std::vector<Document>& docs,
         const std::vector<EmbeddingMatrix>& embs, const ModelParams& params,
         const ScoreOptions& opts, bool strict_nearest) {
        return evaluate_model(docs, as_map(embs), params, opts, strict_nearest);
      },
      py::arg("docs"), py::arg("embeddings"), py::arg("params"),
      py::arg("options"), py::arg("strict_nearest") = false);
  m.def("score_links", &score_links, py::arg("predicted"), py::arg("gold"),
        py::arg("strict_nearest") = false);
  m.def("report_table", &report_table, py::arg("rows"));
  m.def("total_loss",
        [](const std::vector<Document>& docs,
           const std::vector<EmbeddingMatrix>& embs, const ModelParams& params,
           const TrainConfig& cfg) {
          return total_loss(docs, as_map(embs), params, cfg);
        },
        py::arg("docs"), py::arg("embeddings"), py::arg("params"),
        py::arg("config"));
}
