#include "cipherscale/runconfig.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cipherscale/nn/checkpoint.hpp"

namespace cipherscale {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string RunConfig::to_json(int indent) const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["jobs"] = jobs;
  j["corpus"] = {{"path", corpus_path},
                 {"synth_lines", synth_lines},
                 {"synth_order", synth_order},
                 {"synth_k", synth_k},
                 {"seed_text_path", seed_text_path}};
  j["dataset"] = {{"test_lines", test_lines},
                  {"n_multiplier", n_multiplier},
                  {"max_len", max_len},
                  {"pin_space", pin_space}};
  j["model"] = nlohmann::ordered_json::parse(nn::model_config_to_json(model));
  j["train"] = {{"epochs", epochs},
                {"batch_size", batch_size},
                {"lr", adam.lr},
                {"beta1", adam.beta1},
                {"beta2", adam.beta2},
                {"eps", adam.eps}};
  j["solver"] = {{"kind", solver_kind},
                 {"budget", solver_budget},
                 {"restarts", solver_restarts},
                 {"order", solver_order},
                 {"k", solver_k},
                 {"limit", solver_limit}};
  j["sweep"] = {{"axis", sweep_axis},
                {"values", sweep_values},
                {"epochs", sweep_epochs}};
  return indent >= 0 ? j.dump(indent) : j.dump();
}

RunConfig RunConfig::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  RunConfig c;
  c.seed = j.value("seed", c.seed);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.jobs = j.value("jobs", c.jobs);
  if (j.contains("corpus")) {
    const auto& jc = j.at("corpus");
    c.corpus_path = jc.value("path", c.corpus_path);
    c.synth_lines = jc.value("synth_lines", c.synth_lines);
    c.synth_order = jc.value("synth_order", c.synth_order);
    c.synth_k = jc.value("synth_k", c.synth_k);
    c.seed_text_path = jc.value("seed_text_path", c.seed_text_path);
  }
  if (j.contains("dataset")) {
    const auto& jd = j.at("dataset");
    c.test_lines = jd.value("test_lines", c.test_lines);
    c.n_multiplier = jd.value("n_multiplier", c.n_multiplier);
    c.max_len = jd.value("max_len", c.max_len);
    c.pin_space = jd.value("pin_space", c.pin_space);
  }
  if (j.contains("model")) {
    c.model = nn::model_config_from_json(j.at("model").dump());
  }
  if (j.contains("train")) {
    const auto& jt = j.at("train");
    c.epochs = jt.value("epochs", c.epochs);
    c.batch_size = jt.value("batch_size", c.batch_size);
    c.adam.lr = jt.value("lr", c.adam.lr);
    c.adam.beta1 = jt.value("beta1", c.adam.beta1);
    c.adam.beta2 = jt.value("beta2", c.adam.beta2);
    c.adam.eps = jt.value("eps", c.adam.eps);
  }
  if (j.contains("solver")) {
    const auto& js = j.at("solver");
    c.solver_kind = js.value("kind", c.solver_kind);
    c.solver_budget = js.value("budget", c.solver_budget);
    c.solver_restarts = js.value("restarts", c.solver_restarts);
    c.solver_order = js.value("order", c.solver_order);
    c.solver_k = js.value("k", c.solver_k);
    c.solver_limit = js.value("limit", c.solver_limit);
  }
  if (j.contains("sweep")) {
    const auto& js = j.at("sweep");
    c.sweep_axis = js.value("axis", c.sweep_axis);
    c.sweep_values = js.value("values", c.sweep_values);
    c.sweep_epochs = js.value("epochs", c.sweep_epochs);
  }
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string RunConfig::digest() const {
  // The digest identifies the experiment, so fields that cannot change any
  // artifact's content (where it lands, how many workers) stay out of it.
  RunConfig canonical = *this;
  canonical.out_dir.clear();
  canonical.jobs = 1;
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical.to_json())));
  return out;
}

void RunConfig::apply_env() {
  if (const char* s = std::getenv("CIPHERSCALE_SEED")) seed = std::strtoull(s, nullptr, 10);
  if (const char* s = std::getenv("CIPHERSCALE_OUT_DIR")) out_dir = s;
  if (const char* s = std::getenv("CIPHERSCALE_JOBS")) jobs = std::atoi(s);
}

std::vector<std::string> RunConfig::validate() const {
  std::vector<std::string> bad;
  if (out_dir.empty()) bad.push_back("out_dir: must not be empty");
  if (jobs < 1) bad.push_back("jobs: must be >= 1");
  if (synth_lines < 0) bad.push_back("corpus.synth_lines: must be >= 0");
  if (synth_order < 1 || synth_order > 3) bad.push_back("corpus.synth_order: must be 1..3");
  if (!(synth_k > 0.0)) bad.push_back("corpus.synth_k: must be > 0");
  if (test_lines < 1) bad.push_back("dataset.test_lines: must be >= 1");
  if (n_multiplier < 1) bad.push_back("dataset.n_multiplier: must be >= 1");
  if (max_len < 2) bad.push_back("dataset.max_len: must be >= 2");
  if (model.d_model < 1 || model.n_heads < 1 || model.d_model % model.n_heads != 0) {
    bad.push_back("model.d_model: must be positive and divisible by n_heads");
  }
  if (model.n_layers_enc < 1 || model.n_layers_dec < 1) {
    bad.push_back("model.n_layers: must be >= 1");
  }
  if (model.d_ff < 1) bad.push_back("model.d_ff: must be >= 1");
  if (epochs < 0) bad.push_back("train.epochs: must be >= 0");
  if (batch_size < 1) bad.push_back("train.batch_size: must be >= 1");
  if (!(adam.lr > 0.0)) bad.push_back("train.lr: must be > 0");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) bad.push_back("train.beta1: must be in [0,1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) bad.push_back("train.beta2: must be in [0,1)");
  if (!(adam.eps > 0.0)) bad.push_back("train.eps: must be > 0");
  if (solver_kind != "frequency" && solver_kind != "hillclimb") {
    bad.push_back("solver.kind: must be frequency or hillclimb");
  }
  if (solver_budget < 1) bad.push_back("solver.budget: must be >= 1");
  if (solver_restarts < 1) bad.push_back("solver.restarts: must be >= 1");
  if (solver_order < 1 || solver_order > 3) bad.push_back("solver.order: must be 1..3");
  if (!(solver_k > 0.0)) bad.push_back("solver.k: must be > 0");
  if (sweep_axis != "params" && sweep_axis != "dataset") {
    bad.push_back("sweep.axis: must be params or dataset");
  }
  if (sweep_values.empty()) bad.push_back("sweep.values: must not be empty");
  if (sweep_epochs < 1) bad.push_back("sweep.epochs: must be >= 1");
  return bad;
}

}  // namespace cipherscale
