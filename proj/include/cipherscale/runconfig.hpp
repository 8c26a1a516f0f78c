#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cipherscale/nn/adam.hpp"
#include "cipherscale/nn/model.hpp"

namespace cipherscale {

// Everything a run needs, fully serializable. Precedence when assembling:
// config file < environment (CIPHERSCALE_SEED / _OUT_DIR / _JOBS) < flags.
// The digest is computed over the merged JSON and stamped into artifacts.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int jobs = 1;

  // corpus
  std::string corpus_path;  // empty: synthesize
  int synth_lines = 4608;
  int synth_order = 3;
  double synth_k = 0.5;
  std::string seed_text_path;  // empty: built-in sample text

  // dataset
  int test_lines = 512;
  int n_multiplier = 1;
  int max_len = kMaxSeqLen;
  bool pin_space = false;  // sensitivity variant: keep space out of the permutation

  // model
  nn::ModelConfig model;

  // training
  int epochs = 100;
  int batch_size = 16;
  nn::AdamConfig adam;

  // solver baselines
  std::string solver_kind = "frequency";  // frequency | hillclimb | bruteforce
  std::int64_t solver_budget = 50000;
  int solver_restarts = 10;
  int solver_order = 3;
  double solver_k = 0.5;
  int solver_limit = 0;  // 0 = all examples

  // sweep
  std::string sweep_axis = "params";  // params | dataset
  std::vector<int> sweep_values = {16, 32, 64, 128};
  int sweep_epochs = 8;

  std::string to_json(int indent = -1) const;
  static RunConfig from_json(const std::string& text);
  static RunConfig load(const std::string& path);

  // FNV-1a over the canonical JSON dump, as a 16-hex-digit string.
  // out_dir and jobs are excluded: they cannot change artifact content.
  std::string digest() const;

  // Environment overrides, applied between file and flags.
  void apply_env();

  // Returns every offending field, empty when the config is usable.
  std::vector<std::string> validate() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace cipherscale
