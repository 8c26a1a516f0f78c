#include <doctest.h>

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cipherscale/dataset.hpp"
#include "cipherscale/nn/train.hpp"
#include "cipherscale/runconfig.hpp"
#include "cipherscale/textcorpus.hpp"

#include "support.hpp"

using namespace cipherscale;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

const char* cli_path() { return CIPHERSCALE_CLI_PATH; }

int run(const std::string& args) {
  const std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() /
                   ("cipherscale_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string s(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("runconfig: digest stability, json round trip, env precedence") {
  RunConfig a;
  RunConfig b;
  CHECK(a.digest() == b.digest());
  b.seed = 1;
  CHECK(a.digest() != b.digest());

  const RunConfig back = RunConfig::from_json(b.to_json());
  CHECK(back.to_json() == b.to_json());
  CHECK(back.digest() == b.digest());

  ::setenv("CIPHERSCALE_SEED", "777", 1);
  RunConfig env_cfg;
  env_cfg.apply_env();
  CHECK(env_cfg.seed == 777);
  ::unsetenv("CIPHERSCALE_SEED");
}

TEST_CASE("corpus --synth is deterministic; empty input fails") {
  TempDir tmp;
  REQUIRE(run("--seed 5 corpus --synth --n-lines 32 --out " + tmp.s("a.txt") +
              " --out-dir " + tmp.s("out_a")) == 0);
  REQUIRE(run("--seed 5 corpus --synth --n-lines 32 --out " + tmp.s("b.txt") +
              " --out-dir " + tmp.s("out_b")) == 0);
  CHECK(slurp(tmp.path / "a.txt") == slurp(tmp.path / "b.txt"));
  const auto lines = read_lines(tmp.s("a.txt"));
  CHECK(lines.size() == 32);

  std::ofstream(tmp.s("empty.txt")).close();
  CHECK(run("corpus --in " + tmp.s("empty.txt") + " --out " + tmp.s("c.txt") +
            " --out-dir " + tmp.s("out_c")) != 0);
}

TEST_CASE("train smoke: one epoch on 64 lines leaves metrics and checkpoint") {
  TempDir tmp;
  // craft a small dataset pair directly
  const Vocab vocab;
  const NGramModel lm = testsupport::english_model(2);
  const auto corpus = synth_corpus(3, 80, lm);
  const std::vector<NormalizedLine> train_lines(corpus.begin(), corpus.begin() + 64);
  const std::vector<NormalizedLine> test_lines(corpus.begin() + 64, corpus.end());
  write_dataset_jsonl(tmp.s("train.jsonl"),
                      build_dataset(train_lines, vocab, 1, Split::kTrain));
  write_dataset_jsonl(tmp.s("test.jsonl"),
                      build_dataset(test_lines, vocab, 1, Split::kTest));

  REQUIRE(run("--seed 9 --out-dir " + tmp.s("run") + " train --train " +
              tmp.s("train.jsonl") + " --test " + tmp.s("test.jsonl") +
              " --epochs 1 --d-model 16") == 0);
  CHECK(fs::exists(tmp.path / "run" / "metrics.csv"));
  CHECK(fs::exists(tmp.path / "run" / "checkpoint.bin"));
  CHECK(fs::exists(tmp.path / "run" / "last.ckpt"));
  CHECK(fs::exists(tmp.path / "run" / "run_config.json"));

  const auto history = nn::read_metrics_csv(tmp.s("run/metrics.csv"));
  REQUIRE(history.size() == 1);
  CHECK(history[0].epoch == 1);

  // eval on the produced checkpoint
  REQUIRE(run("--seed 9 --out-dir " + tmp.s("eval") + " eval --checkpoint " +
              tmp.s("run/checkpoint.bin") + " --dataset " + tmp.s("test.jsonl") +
              " --probes 8") == 0);
  const auto report = nlohmann::json::parse(slurp(tmp.path / "eval" / "scale_report.json"));
  CHECK(report.contains("mean_ce"));
  CHECK(report.contains("equivariance_residual"));
  CHECK(report.contains("non_invariance"));
  CHECK(report.contains("config_digest"));

  // plot the metrics
  REQUIRE(run("plot --kind loss_curve --in " + tmp.s("run/metrics.csv") +
              " --out " + tmp.s("curve.svg")) == 0);
  const std::string svg = slurp(tmp.path / "curve.svg");
  CHECK(svg.find("<svg") != std::string::npos);
}

TEST_CASE("baseline --solver=frequency emits the report schema") {
  TempDir tmp;
  const Vocab vocab;
  const NGramModel lm = testsupport::english_model(2);
  const auto corpus = synth_corpus(4, 12, lm);
  write_dataset_jsonl(tmp.s("ds.jsonl"),
                      build_dataset(corpus, vocab, 2, Split::kTest));

  REQUIRE(run("--out-dir " + tmp.s("base") + " baseline --dataset " +
              tmp.s("ds.jsonl") + " --solver frequency") == 0);
  const auto report =
      nlohmann::json::parse(slurp(tmp.path / "base" / "baseline_report.json"));
  CHECK(report.contains("symbol_accuracy"));
  CHECK(report.contains("mean_ce"));
  CHECK(report.contains("per_slot_accuracy"));
  CHECK(report.at("per_slot_accuracy").size() == 27);
  CHECK(report.at("solver") == "frequency");
}

TEST_CASE("plot determinism: identical CSV gives identical SVG bytes") {
  TempDir tmp;
  std::ofstream csv(tmp.s("sweep.csv"));
  csv << "run_id,x,y,epochs,wall_time_s\n";
  csv << "params_d16,17000,3.1,2,1.0\n";
  csv << "params_d32,60000,2.4,2,1.0\n";
  csv << "params_d64,228000,1.8,2,1.0\n";
  csv.close();

  REQUIRE(run("plot --kind loglog --in " + tmp.s("sweep.csv") + " --out " +
              tmp.s("a.svg")) == 0);
  REQUIRE(run("plot --kind loglog --in " + tmp.s("sweep.csv") + " --out " +
              tmp.s("b.svg")) == 0);
  const std::string a = slurp(tmp.path / "a.svg");
  CHECK(a == slurp(tmp.path / "b.svg"));
  CHECK(a.find("slope b = ") != std::string::npos);
}

TEST_SUITE_END();
