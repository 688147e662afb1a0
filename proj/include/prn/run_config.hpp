#pragma once

#include <string>

#include "prn/train_config.hpp"

namespace prn {

// One flat `key = value` file drives every subcommand; TrainConfig keys live
// in the same namespace. Artifact paths left empty are resolved against
// output_dir so a single config can carry a whole pipeline run.
struct RunConfig {
  std::string corpus;           // CoNLL file (input; synth writes it)
  std::string embeddings;       // EMB1 file (input; synth writes it)
  std::string checkpoint;       // model file (train writes, predict reads)
  std::string init_checkpoint;  // optional warm start for train (pretrain writes)
  std::string output_dir = ".";
  std::string predictions;  // predict: CoNLL with predicted clusters
  std::string links;        // predict: pronoun-link sidecar; eval reads it
  std::string report;       // eval: metric table
  std::string train_log;    // train: per-epoch TSV
  std::string scores_dump;  // predict --dump-scores: antecedent score rows

  TrainConfig train;
  int threads = 1;
  bool dump_scores = false;
  bool strict_nearest = false;
  int pretrain_epochs = 50;
  std::string model_name = "model";  // report row label

  int synth_docs = 20;
  int synth_vocab = 50;
  int synth_dim = 16;

  // Fills empty artifact paths from output_dir.
  void resolve_paths();
  void validate() const;  // throws InvalidParam

  // Assigns one field by key (own keys first, then TrainConfig's); returns
  // false for unknown keys, throws InvalidParam on unparseable values.
  bool set(const std::string& key, const std::string& value);

  // Sorted, fully-resolved "key = value" echo; parsing it back round-trips.
  std::string to_kv_string() const;
  static RunConfig from_kv_string(const std::string& text);
  static RunConfig load_file(const std::string& path);

  bool operator==(const RunConfig&) const = default;
};

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace prn
