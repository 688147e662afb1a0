#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "prn/corpus.hpp"
#include "prn/encoder.hpp"
#include "prn/evaluator.hpp"
#include "prn/learner.hpp"
#include "prn/model.hpp"
#include "prn/resolver.hpp"
#include "prn/run_config.hpp"
#include "prn/scorer.hpp"

namespace {

using namespace prn;

int log_level() {
  static int level = [] {
    const char* env = std::getenv("PRN_LOG");
    return env != nullptr ? std::atoi(env) : 1;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::fprintf(stderr, "%s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::fprintf(stderr, "%s\n", msg.c_str());
}

// Static chunk-free work queue; each index writes only its own slot, so
// results are independent of the thread count.
template <typename F>
void parallel_for(int n, int threads, F&& f) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          f(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void write_echo(const RunConfig& cfg, const std::string& command) {
  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.output_dir + "/" + command + ".resolved.cfg",
                  cfg.to_kv_string());
}

std::string stats_table(const CorpusStats& s) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "documents  %lld\nsentences  %lld\ntokens     %lld\n",
                static_cast<long long>(s.documents),
                static_cast<long long>(s.sentences),
                static_cast<long long>(s.tokens));
  return buf;
}

std::pair<std::vector<Document>, EmbeddingMap> load_inputs(const RunConfig& cfg) {
  std::vector<Document> docs = load_corpus(cfg.corpus);
  EmbeddingMap embs = to_map(load_embeddings_file(cfg.embeddings));
  check_embeddings(docs, embs);
  return {std::move(docs), std::move(embs)};
}

int cmd_validate(const RunConfig& cfg) {
  try {
    std::vector<Document> docs = load_corpus(cfg.corpus);
    std::fputs(stats_table(corpus_stats(docs)).c_str(), stdout);
    return 0;
  } catch (const CorpusError& e) {
    // what() already carries the "line N:" prefix when one applies
    std::fprintf(stderr, "%s: %s\n", cfg.corpus.c_str(), e.what());
    return 2;
  }
}

int cmd_stats(const RunConfig& cfg) {
  std::vector<Document> docs = load_corpus(cfg.corpus);
  std::fputs(stats_table(corpus_stats(docs)).c_str(), stdout);
  return 0;
}

int cmd_synth(RunConfig cfg) {
  std::filesystem::create_directories(cfg.output_dir);
  std::vector<Document> docs =
      generate_synthetic_corpus(cfg.train.seed, cfg.synth_docs, cfg.synth_vocab);
  save_corpus(docs, cfg.corpus);
  StaticLookupEncoder enc =
      make_surface_hash_encoder(docs, cfg.synth_dim, cfg.train.seed);
  write_embeddings_file(enc.encode_corpus(docs), cfg.embeddings);
  write_echo(cfg, "synth");
  log_info("synth: wrote " + std::to_string(docs.size()) + " documents to " +
           cfg.corpus);
  return 0;
}

int cmd_pretrain(RunConfig cfg) {
  auto [docs, embs] = load_inputs(cfg);
  ModelParams params = pretrain_detector(docs, embs, cfg.train, cfg.pretrain_epochs);
  if (cfg.init_checkpoint.empty()) {
    cfg.init_checkpoint = cfg.output_dir + "/pretrained.prn";
  }
  std::filesystem::create_directories(cfg.output_dir);
  save_checkpoint_file(params, cfg.train, cfg.init_checkpoint);
  write_echo(cfg, "pretrain");
  log_info("pretrain: detector accuracy " +
           std::to_string(detector_accuracy(docs, embs, params,
                                            cfg.train.max_span_width)) +
           ", wrote " + cfg.init_checkpoint);
  return 0;
}

int cmd_train(RunConfig cfg) {
  auto [docs, embs] = load_inputs(cfg);
  auto [train_docs, dev_docs] =
      split_corpus(docs, cfg.train.dev_fraction, cfg.train.seed);
  std::optional<ModelParams> init;
  if (!cfg.init_checkpoint.empty()) {
    init = load_checkpoint_file(cfg.init_checkpoint);
  }
  TrainResult result =
      train(train_docs, dev_docs, embs, cfg.train, init ? &*init : nullptr);
  std::filesystem::create_directories(cfg.output_dir);
  save_checkpoint_file(result.params, cfg.train, cfg.checkpoint);
  write_text_file(cfg.train_log, format_train_log(result.log));
  write_echo(cfg, "train");
  log_info("train: " + std::to_string(result.log.size()) + " epochs, best " +
           std::to_string(result.best_epoch) + ", wrote " + cfg.checkpoint);
  return 0;
}

std::string dump_score_rows(const Document& doc, const DocumentScores& scores) {
  std::ostringstream out;
  auto span_txt = [](const Span& s) {
    return std::to_string(s.start) + "," + std::to_string(s.end);
  };
  char num[48];
  auto score_txt = [&](double v) {
    std::snprintf(num, sizeof num, "%.6f", v);
    return std::string(num);
  };
  for (std::size_t i = 0; i < scores.rows.size(); ++i) {
    const Span& si = scores.spans[scores.kept[i]];
    out << doc.doc_id << '\t' << span_txt(si) << "\tMENTION\t"
        << score_txt(scores.kept_scores[i]) << '\n';
    out << doc.doc_id << '\t' << span_txt(si) << "\tEPS\t" << score_txt(0.0)
        << '\n';
    const AntecedentRow& row = scores.rows[i];
    for (std::size_t k = 0; k < row.candidates.size(); ++k) {
      const Span& sj = scores.spans[scores.kept[row.candidates[k]]];
      out << doc.doc_id << '\t' << span_txt(si) << '\t' << span_txt(sj) << '\t'
          << score_txt(row.scores[k]) << '\n';
    }
  }
  return out.str();
}

int cmd_predict(RunConfig cfg) {
  std::vector<Document> docs = load_corpus(cfg.corpus);
  EmbeddingMap embs = to_map(load_embeddings_file(cfg.embeddings));
  check_embeddings(docs, embs);
  // The checkpoint's embedded config is authoritative for how spans are
  // enumerated, pruned, and refined; the echo reflects it.
  TrainConfig ckpt_cfg;
  ModelParams params = load_checkpoint_file(cfg.checkpoint, &ckpt_cfg);
  cfg.train = ckpt_cfg;
  ScoreOptions opts = ScoreOptions::from(cfg.train);

  int n = static_cast<int>(docs.size());
  std::vector<Document> predicted(n);
  std::vector<DocLinks> links(n);
  std::vector<std::string> dumps(n);
  parallel_for(n, cfg.threads, [&](int i) {
    const Document& doc = docs[i];
    DocumentScores scores = score_document(doc, embs.at(doc.doc_id), params, opts);
    std::vector<Span> kept_spans;
    kept_spans.reserve(scores.kept.size());
    for (int k : scores.kept) kept_spans.push_back(scores.spans[k]);
    ResolutionResult result = decode(kept_spans, scores.rows);
    predicted[i] = predicted_document(doc, result);
    links[i] = {doc.doc_id, resolve_pronouns(doc, result)};
    if (cfg.dump_scores) dumps[i] = dump_score_rows(doc, scores);
  });

  std::filesystem::create_directories(cfg.output_dir);
  save_corpus(predicted, cfg.predictions);
  write_links_file(links, cfg.links);
  if (cfg.dump_scores) {
    std::string all;
    for (const std::string& d : dumps) all += d;
    write_text_file(cfg.scores_dump, all);
  }
  write_echo(cfg, "predict");
  log_info("predict: wrote " + cfg.predictions + " and " + cfg.links);
  return 0;
}

int cmd_eval(RunConfig cfg) {
  std::vector<Document> gold = load_corpus(cfg.corpus);
  std::vector<DocLinks> links = load_links_file(cfg.links);
  EvalReport rep = score_links(links, gold, cfg.strict_nearest);
  std::string table = report_table({{cfg.model_name, rep}});
  std::filesystem::create_directories(cfg.output_dir);
  write_text_file(cfg.report, table);
  write_echo(cfg, "eval");
  std::fputs(table.c_str(), stdout);
  log_debug("eval: attempted " + std::to_string(rep.attempted) + ", correct " +
            std::to_string(rep.correct) + ", resolvable " +
            std::to_string(rep.resolvable));
  return 0;
}

// Flag storage; an option only overrides the config file when actually given.
struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string corpus, embeddings, checkpoint, init_checkpoint, output_dir;
  std::string links, report, model_name;
  int epochs = 0, pretrain_epochs = 0;
  int synth_docs = 0, synth_vocab = 0, synth_dim = 0;
  bool dump_scores = false;
  bool strict_nearest = false;
};

struct CommonOpts {
  CLI::Option* seed;
  CLI::Option* threads;
  CLI::Option* corpus;
  CLI::Option* embeddings;
  CLI::Option* checkpoint;
  CLI::Option* output_dir;
};

CommonOpts add_common(CLI::App* cmd, Flags& f) {
  CommonOpts o;
  cmd->add_option("--config", f.config, "key = value config file");
  o.seed = cmd->add_option("--seed", f.seed, "random seed");
  o.threads = cmd->add_option("--threads", f.threads, "worker threads");
  o.corpus = cmd->add_option("--corpus", f.corpus, "CoNLL corpus path");
  o.embeddings = cmd->add_option("--embeddings", f.embeddings, "EMB1 file path");
  o.checkpoint = cmd->add_option("--checkpoint", f.checkpoint, "model file path");
  o.output_dir = cmd->add_option("--output-dir", f.output_dir, "artifact directory");
  return o;
}

RunConfig build_config(const Flags& f, const CommonOpts& o) {
  RunConfig cfg;
  if (!f.config.empty()) cfg = RunConfig::load_file(f.config);
  if (*o.seed) cfg.train.seed = f.seed;
  if (*o.threads) cfg.threads = f.threads;
  if (*o.corpus) cfg.corpus = f.corpus;
  if (*o.embeddings) cfg.embeddings = f.embeddings;
  if (*o.checkpoint) cfg.checkpoint = f.checkpoint;
  if (*o.output_dir) cfg.output_dir = f.output_dir;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Span-based pronoun resolution pipeline"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* validate = app.add_subcommand("validate", "check a CoNLL corpus");
  CommonOpts validate_o = add_common(validate, f);
  CLI::App* stats = app.add_subcommand("stats", "print corpus statistics");
  CommonOpts stats_o = add_common(stats, f);

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  CommonOpts synth_o = add_common(synth, f);
  CLI::Option* o_sdocs = synth->add_option("--synth-docs", f.synth_docs);
  CLI::Option* o_svocab = synth->add_option("--synth-vocab", f.synth_vocab);
  CLI::Option* o_sdim = synth->add_option("--synth-dim", f.synth_dim);

  CLI::App* pretrain = app.add_subcommand("pretrain", "pretrain the mention detector");
  CommonOpts pretrain_o = add_common(pretrain, f);
  CLI::Option* o_pepochs = pretrain->add_option("--pretrain-epochs", f.pretrain_epochs);
  CLI::Option* o_pinit = pretrain->add_option("--init-checkpoint", f.init_checkpoint,
                                              "where to write the detector model");

  CLI::App* train_cmd = app.add_subcommand("train", "joint training");
  CommonOpts train_o = add_common(train_cmd, f);
  CLI::Option* o_epochs = train_cmd->add_option("--epochs", f.epochs);
  CLI::Option* o_tinit = train_cmd->add_option("--init-checkpoint", f.init_checkpoint,
                                               "warm-start model file");

  CLI::App* predict = app.add_subcommand("predict", "resolve pronouns");
  CommonOpts predict_o = add_common(predict, f);
  CLI::Option* o_dump = predict->add_flag("--dump-scores", f.dump_scores,
                                          "write antecedent score rows");

  CLI::App* eval = app.add_subcommand("eval", "score predicted links");
  CommonOpts eval_o = add_common(eval, f);
  CLI::Option* o_strict = eval->add_flag("--strict-nearest", f.strict_nearest,
                                         "credit only the nearest antecedent");
  CLI::Option* o_links = eval->add_option("--links", f.links, "predicted links file");
  CLI::Option* o_report = eval->add_option("--report", f.report);
  CLI::Option* o_model = eval->add_option("--model-name", f.model_name);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      RunConfig cfg = build_config(f, validate_o);
      cfg.resolve_paths();
      return cmd_validate(cfg);
    }
    if (*stats) {
      RunConfig cfg = build_config(f, stats_o);
      cfg.resolve_paths();
      return cmd_stats(cfg);
    }
    if (*synth) {
      RunConfig cfg = build_config(f, synth_o);
      if (*o_sdocs) cfg.synth_docs = f.synth_docs;
      if (*o_svocab) cfg.synth_vocab = f.synth_vocab;
      if (*o_sdim) cfg.synth_dim = f.synth_dim;
      cfg.resolve_paths();
      cfg.validate();
      return cmd_synth(cfg);
    }
    if (*pretrain) {
      RunConfig cfg = build_config(f, pretrain_o);
      if (*o_pepochs) cfg.pretrain_epochs = f.pretrain_epochs;
      if (*o_pinit) cfg.init_checkpoint = f.init_checkpoint;
      cfg.resolve_paths();
      cfg.validate();
      return cmd_pretrain(cfg);
    }
    if (*train_cmd) {
      RunConfig cfg = build_config(f, train_o);
      if (*o_epochs) cfg.train.epochs = f.epochs;
      if (*o_tinit) cfg.init_checkpoint = f.init_checkpoint;
      cfg.resolve_paths();
      cfg.validate();
      return cmd_train(cfg);
    }
    if (*predict) {
      RunConfig cfg = build_config(f, predict_o);
      if (*o_dump) cfg.dump_scores = true;
      cfg.resolve_paths();
      cfg.validate();
      return cmd_predict(cfg);
    }
    if (*eval) {
      RunConfig cfg = build_config(f, eval_o);
      if (*o_strict) cfg.strict_nearest = true;
      if (*o_links) cfg.links = f.links;
      if (*o_report) cfg.report = f.report;
      if (*o_model) cfg.model_name = f.model_name;
      cfg.resolve_paths();
      cfg.validate();
      return cmd_eval(cfg);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
