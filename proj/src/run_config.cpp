#include "prn/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <vector>

#include "prn/errors.hpp"

namespace prn {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(value, &used);
  } catch (const std::exception&) {
    used = std::string::npos;
  }
  if (used != value.size()) {
    throw InvalidParam("bad value for '" + key + "': '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidParam("bad value for '" + key + "': '" + value + "'");
}

std::string join(const std::string& dir, const char* name) {
  if (dir.empty() || dir.back() == '/') return dir + name;
  return dir + "/" + name;
}

}  // namespace

void RunConfig::resolve_paths() {
  if (corpus.empty()) corpus = join(output_dir, "corpus.conll");
  if (embeddings.empty()) embeddings = join(output_dir, "embeddings.bin");
  if (checkpoint.empty()) checkpoint = join(output_dir, "model.prn");
  if (predictions.empty()) predictions = join(output_dir, "predictions.conll");
  if (links.empty()) links = join(output_dir, "links.tsv");
  if (report.empty()) report = join(output_dir, "report.txt");
  if (train_log.empty()) train_log = join(output_dir, "train.log");
  if (scores_dump.empty()) scores_dump = join(output_dir, "scores.tsv");
  // init_checkpoint stays empty unless set: it is an optional warm start.
}

void RunConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw InvalidParam(std::string("RunConfig: ") + what);
  };
  require(threads >= 1, "threads must be >= 1");
  require(pretrain_epochs >= 0, "pretrain_epochs must be >= 0");
  require(synth_docs >= 1, "synth_docs must be >= 1");
  require(synth_vocab >= 1, "synth_vocab must be >= 1");
  require(synth_dim >= 1, "synth_dim must be >= 1");
  require(!model_name.empty(), "model_name must not be empty");
  require(!output_dir.empty(), "output_dir must not be empty");
  train.validate();
}

bool RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "corpus") corpus = value;
  else if (key == "embeddings") embeddings = value;
  else if (key == "checkpoint") checkpoint = value;
  else if (key == "init_checkpoint") init_checkpoint = value;
  else if (key == "output_dir") output_dir = value;
  else if (key == "predictions") predictions = value;
  else if (key == "links") links = value;
  else if (key == "report") report = value;
  else if (key == "train_log") train_log = value;
  else if (key == "scores_dump") scores_dump = value;
  else if (key == "threads") threads = parse_int(key, value);
  else if (key == "dump_scores") dump_scores = parse_bool(key, value);
  else if (key == "strict_nearest") strict_nearest = parse_bool(key, value);
  else if (key == "pretrain_epochs") pretrain_epochs = parse_int(key, value);
  else if (key == "model_name") model_name = value;
  else if (key == "synth_docs") synth_docs = parse_int(key, value);
  else if (key == "synth_vocab") synth_vocab = parse_int(key, value);
  else if (key == "synth_dim") synth_dim = parse_int(key, value);
  else return train.set(key, value);
  return true;
}

std::string RunConfig::to_kv_string() const {
  std::ostringstream own;
  own << "checkpoint = " << checkpoint << '\n'
      << "corpus = " << corpus << '\n'
      << "dump_scores = " << (dump_scores ? "true" : "false") << '\n'
      << "embeddings = " << embeddings << '\n'
      << "init_checkpoint = " << init_checkpoint << '\n'
      << "links = " << links << '\n'
      << "model_name = " << model_name << '\n'
      << "output_dir = " << output_dir << '\n'
      << "predictions = " << predictions << '\n'
      << "pretrain_epochs = " << pretrain_epochs << '\n'
      << "report = " << report << '\n'
      << "scores_dump = " << scores_dump << '\n'
      << "strict_nearest = " << (strict_nearest ? "true" : "false") << '\n'
      << "synth_dim = " << synth_dim << '\n'
      << "synth_docs = " << synth_docs << '\n'
      << "synth_vocab = " << synth_vocab << '\n'
      << "threads = " << threads << '\n'
      << "train_log = " << train_log << '\n';
  std::vector<std::string> lines;
  std::istringstream merged(own.str() + train.to_kv_string());
  std::string line;
  while (std::getline(merged, line)) lines.push_back(line);
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const std::string& l : lines) out += l + '\n';
  return out;
}

RunConfig RunConfig::from_kv_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw InvalidParam("config line " + std::to_string(line_no) +
                         ": expected 'key = value'");
    }
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (!cfg.set(key, value)) {
      throw InvalidParam("config line " + std::to_string(line_no) +
                         ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

RunConfig RunConfig::load_file(const std::string& path) {
  return from_kv_string(read_text_file(path));
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace prn
