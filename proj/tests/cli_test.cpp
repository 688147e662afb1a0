#include <cstdlib>
#include <filesystem>
#include <string>

#ifndef _WIN32
#include <sys/wait.h>
#endif

#include "doctest.h"
#include "prn/run_config.hpp"

// PRN_BIN is injected by the build: the full path to the prn executable.

namespace fs = std::filesystem;
using prn::read_text_file;
using prn::write_text_file;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::path("cli_scratch") / std::to_string(counter()++);
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string path(const char* name) const { return (dir / name).string(); }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

RunResult run(const Scratch& s, const std::string& args) {
  std::string out_path = s.path("stdout.txt");
  std::string err_path = s.path("stderr.txt");
  std::string cmd = std::string(PRN_BIN) + " " + args + " > " + out_path +
                    " 2> " + err_path;
  int rc = std::system(cmd.c_str());
  RunResult res;
#ifdef _WIN32
  res.exit_code = rc;
#else
  res.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
#endif
  res.out = read_text_file(out_path);
  res.err = read_text_file(err_path);
  return res;
}

const char* kGoodCorpus =
    "#begin document (cli)\n"
    "0\tAnn\t-\t(1\n"
    "1\tsmiled\t-\t1)\n"
    "\n"
    "2\tshe\tPERS\t(1)\n"
    "#end document\n";

}  // namespace

TEST_CASE("validate accepts a well-formed corpus and reports stats") {
  Scratch s;
  write_text_file(s.path("good.conll"), kGoodCorpus);
  RunResult r = run(s, "validate --corpus " + s.path("good.conll"));
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("documents  1") != std::string::npos);
  CHECK(r.out.find("sentences  2") != std::string::npos);
  CHECK(r.out.find("tokens     3") != std::string::npos);
}

TEST_CASE("validate exits 2 on malformed input and names the line") {
  Scratch s;
  write_text_file(s.path("bad.conll"),
                  "#begin document (x)\n0\tAnn\t-\t(1\n#end document\n");
  RunResult r = run(s, "validate --corpus " + s.path("bad.conll"));
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("bad.conll") != std::string::npos);
  CHECK(r.err.find("chain 1") != std::string::npos);
}

TEST_CASE("module errors exit 1 with an error line") {
  Scratch s;
  RunResult r = run(s, "stats --corpus " + s.path("missing.conll"));
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("error:") != std::string::npos);

  r = run(s, "predict --corpus x --embeddings y --checkpoint " +
                 s.path("nope.prn") + " --output-dir " + s.dir.string());
  CHECK(r.exit_code == 1);
}

TEST_CASE("bad usage is rejected by the argument parser") {
  Scratch s;
  CHECK(run(s, "").exit_code != 0);
  CHECK(run(s, "frobnicate").exit_code != 0);
  CHECK(run(s, "validate --no-such-flag").exit_code != 0);
}

TEST_CASE("synth writes a loadable corpus, embeddings, and a truthful echo") {
  Scratch s;
  RunResult r = run(s, "synth --output-dir " + s.dir.string() +
                           " --seed 5 --config /dev/null");
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(s.path("corpus.conll")));
  CHECK(fs::exists(s.path("embeddings.bin")));

  // the resolved echo names the artifacts it wrote and parses back
  prn::RunConfig echo = prn::RunConfig::load_file(s.path("synth.resolved.cfg"));
  CHECK(echo.corpus == s.path("corpus.conll"));
  CHECK(echo.embeddings == s.path("embeddings.bin"));
  CHECK(echo.train.seed == 5);

  // the synthesized corpus passes validation
  RunResult v = run(s, "validate --corpus " + s.path("corpus.conll"));
  CHECK(v.exit_code == 0);

  // same seed, same bytes
  Scratch s2;
  RunResult r2 = run(s2, "synth --output-dir " + s2.dir.string() + " --seed 5");
  CHECK(r2.exit_code == 0);
  CHECK(read_text_file(s.path("corpus.conll")) ==
        read_text_file(s2.path("corpus.conll")));
  CHECK(read_text_file(s.path("embeddings.bin")) ==
        read_text_file(s2.path("embeddings.bin")));
}

TEST_CASE("config values can come from a file with flag overrides on top") {
  Scratch s;
  write_text_file(s.path("run.cfg"),
                  "synth_docs = 3\nsynth_vocab = 12\nseed = 11\n");
  RunResult r = run(s, "synth --config " + s.path("run.cfg") + " --output-dir " +
                           s.dir.string() + " --seed 12");
  CHECK(r.exit_code == 0);
  prn::RunConfig echo = prn::RunConfig::load_file(s.path("synth.resolved.cfg"));
  CHECK(echo.synth_docs == 3);      // from the file
  CHECK(echo.train.seed == 12);     // flag wins over the file
}
