// Drives the installed command-line binary as a subprocess and checks exit
// codes, artifacts, and reproducibility. PAIRRE_CLI_PATH is injected by the
// build so the test always runs the binary it was built with.
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "tmpdir.hpp"

namespace {

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const TempDir& tmp, const std::string& args) {
  std::string out_path = (tmp.path() / "cli_stdout.txt").string();
  std::string err_path = (tmp.path() / "cli_stderr.txt").string();
  std::string cmd = std::string(PAIRRE_CLI_PATH) + " " + args + " >" +
                    out_path + " 2>" + err_path;
  int rc = std::system(cmd.c_str());
  RunResult res;
  res.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  res.out = slurp(out_path);
  res.err = slurp(err_path);
  return res;
}

// ring over 8 entities: two relations with disjoint strides
std::string write_corpus(TempDir& tmp) {
  std::ostringstream train;
  for (int i = 0; i < 8; ++i) {
    train << "e" << i << "\tnext\te" << (i + 1) % 8 << "\n";
    train << "e" << i << "\tskip\te" << (i + 2) % 8 << "\n";
  }
  tmp.write("train.tsv", train.str());
  tmp.write("valid.tsv", "e0\tnext\te1\ne2\tskip\te4\n");
  tmp.write("test.tsv", "e1\tnext\te2\ne3\tskip\te5\n");
  tmp.write("train.conf",
            "gamma = 6\n"
            "dim = 16\n"
            "learning_rate = 0.05\n"
            "batch_size = 8\n"
            "max_steps = 60\n"
            "num_negatives = 4\n"
            "seed = 11\n"
            "log_every = 20\n");
  return tmp.path().string();
}

std::string manifest_run_id(const std::string& manifest_json) {
  size_t at = manifest_json.find("\"run_id\"");
  REQUIRE(at != std::string::npos);
  size_t open = manifest_json.find('"', manifest_json.find(':', at));
  size_t close = manifest_json.find('"', open + 1);
  return manifest_json.substr(open + 1, close - open - 1);
}

}  // namespace

TEST_CASE("the binary reports a version and demands a subcommand") {
  TempDir tmp;
  CHECK(run_cli(tmp, "--version").code == 0);
  CHECK(run_cli(tmp, "").code == 1);
  CHECK(run_cli(tmp, "train --no-such-flag").code == 1);
  CHECK(run_cli(tmp, "train").code == 1);  // missing required options
}

TEST_CASE("training produces a checkpoint, a log, and a manifest") {
  TempDir tmp;
  std::string root = write_corpus(tmp);

  RunResult res = run_cli(
      tmp, "train --config " + root + "/train.conf --train " + root +
               "/train.tsv --valid " + root + "/valid.tsv --out " + root +
               "/run1");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("trained 60 steps") != std::string::npos);
  CHECK(res.out.find("checkpoint_final") != std::string::npos);

  std::string manifest = slurp(root + "/run1/run_manifest.json");
  REQUIRE(!manifest.empty());
  std::string run_id = manifest_run_id(manifest);
  CHECK(run_id.size() == 16);
  CHECK(manifest.find("\"wall_seconds\"") != std::string::npos);
  CHECK(manifest.find("\"final_loss\"") != std::string::npos);
  CHECK(manifest.find("\"train.tsv\"") == std::string::npos);  // full paths

  // the training log points back at the manifest that produced it
  std::ifstream log(root + "/run1/train_log.tsv");
  std::string first;
  REQUIRE(std::getline(log, first));
  CHECK(first == "# run_manifest: run_manifest.json#" + run_id);
  size_t rows = 0;
  std::string line;
  while (std::getline(log, line)) {
    if (!line.empty() && line[0] != '#') ++rows;
  }
  CHECK(rows >= 3);  // steps 20, 40, 60 at least

  for (const char* f : {"manifest.json", "entities.f64", "relations.f64",
                        "entity_names.txt", "relation_names.txt"}) {
    CHECK(std::ifstream(root + "/run1/checkpoint_final/" + f).good());
  }
}

TEST_CASE("identical seeds reproduce checkpoints byte for byte") {
  TempDir tmp;
  std::string root = write_corpus(tmp);
  std::string common = "train --config " + root + "/train.conf --train " +
                       root + "/train.tsv --out ";
  REQUIRE(run_cli(tmp, common + root + "/runA").code == 0);
  REQUIRE(run_cli(tmp, common + root + "/runB").code == 0);

  CHECK(slurp(root + "/runA/checkpoint_final/entities.f64") ==
        slurp(root + "/runB/checkpoint_final/entities.f64"));
  CHECK(slurp(root + "/runA/checkpoint_final/relations.f64") ==
        slurp(root + "/runB/checkpoint_final/relations.f64"));

  // reissuing the exact command keeps the manifest identity stable
  std::string id_before = manifest_run_id(slurp(root +
                                                "/runA/run_manifest.json"));
  REQUIRE(run_cli(tmp, common + root + "/runA").code == 0);
  std::string id_after = manifest_run_id(slurp(root +
                                               "/runA/run_manifest.json"));
  CHECK(id_before == id_after);
}

TEST_CASE("evaluation writes the report next to its manifest") {
  TempDir tmp;
  std::string root = write_corpus(tmp);
  REQUIRE(run_cli(tmp, "train --config " + root + "/train.conf --train " +
                           root + "/train.tsv --out " + root + "/run1")
              .code == 0);

  RunResult res = run_cli(
      tmp, "eval --checkpoint " + root + "/run1/checkpoint_final --test " +
               root + "/test.tsv --filter " + root + "/train.tsv --out " +
               root + "/report.tsv");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("scope\tside\tmr\tmrr") != std::string::npos);
  CHECK(res.out.find("overall") != std::string::npos);

  std::string report = slurp(root + "/report.tsv");
  REQUIRE(!report.empty());
  std::string manifest = slurp(root + "/report.tsv.run_manifest.json");
  REQUIRE(!manifest.empty());
  std::string run_id = manifest_run_id(manifest);
  std::istringstream rep(report);
  std::string first;
  REQUIRE(std::getline(rep, first));
  CHECK(first == "# run_manifest: report.tsv.run_manifest.json#" + run_id);
  // the eval manifest names the checkpoint's own training manifest
  CHECK(manifest.find("checkpoint_run_manifest") != std::string::npos);

  CHECK(run_cli(tmp, "eval --checkpoint " + root +
                         "/run1/checkpoint_final --test " + root +
                         "/test.tsv --filter " + root +
                         "/train.tsv --tie-policy median")
            .code == 1);
}

TEST_CASE("analysis prints residuals and writes the histogram") {
  TempDir tmp;
  std::string root = write_corpus(tmp);
  REQUIRE(run_cli(tmp, "train --config " + root + "/train.conf --train " +
                           root + "/train.tsv --out " + root + "/run1")
              .code == 0);

  RunResult res = run_cli(
      tmp, "analyze --checkpoint " + root + "/run1/checkpoint_final "
               "--pattern subrelation --relations next,skip --bins 5 --out " +
               root + "/hist.tsv");
  CAPTURE(res.err);
  REQUIRE(res.code == 0);
  CHECK(res.out.find("subrelation(next, skip)") != std::string::npos);
  CHECK(res.out.find("mean |residual|") != std::string::npos);
  CHECK(res.out.find("entailment ratio check") != std::string::npos);

  std::ifstream hist(root + "/hist.tsv");
  size_t rows = 0;
  std::string line;
  while (std::getline(hist, line)) ++rows;
  CHECK(rows == 5);

  // arity mismatch surfaces as a usage failure
  CHECK(run_cli(tmp, "analyze --checkpoint " + root +
                         "/run1/checkpoint_final --pattern inverse "
                         "--relations next --out " + root + "/h2.tsv")
            .code == 1);
  // unknown relation names are data failures
  RunResult bad = run_cli(tmp, "analyze --checkpoint " + root +
                                   "/run1/checkpoint_final --pattern "
                                   "symmetry --relations nope --out " +
                                   root + "/h3.tsv");
  CHECK(bad.code == 2);
  CHECK(bad.err.find("nope") != std::string::npos);
}

TEST_CASE("broken inputs map to the documented exit codes") {
  TempDir tmp;
  std::string root = write_corpus(tmp);
  tmp.write("nogamma.conf", "dim = 8\n");

  RunResult bad_conf = run_cli(
      tmp, "train --config " + root + "/nogamma.conf --train " + root +
               "/train.tsv --out " + root + "/runX");
  CHECK(bad_conf.code == 2);
  CHECK(bad_conf.err.find("gamma") != std::string::npos);

  RunResult no_file = run_cli(
      tmp, "train --config " + root + "/train.conf --train " + root +
               "/absent.tsv --out " + root + "/runX");
  CHECK(no_file.code == 2);
  CHECK(no_file.err.find("absent.tsv") != std::string::npos);

  RunResult no_ckpt = run_cli(
      tmp, "eval --checkpoint " + root + "/no_such_dir --test " + root +
               "/test.tsv --filter " + root + "/train.tsv");
  CHECK(no_ckpt.code == 2);
}
