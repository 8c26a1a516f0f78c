#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cipherscale/dataset.hpp"
#include "cipherscale/ngram.hpp"
#include "cipherscale/nn/checkpoint.hpp"
#include "cipherscale/nn/train.hpp"
#include "cipherscale/runconfig.hpp"
#include "cipherscale/scale.hpp"
#include "cipherscale/scaling.hpp"
#include "cipherscale/solvers.hpp"
#include "cipherscale/svgplot.hpp"
#include "cipherscale/textcorpus.hpp"

namespace fs = std::filesystem;
using namespace cipherscale;

namespace {

std::vector<NormalizedLine> seed_text_lines(const RunConfig& cfg) {
  std::string raw;
  if (!cfg.seed_text_path.empty()) {
    for (const auto& line : read_lines(cfg.seed_text_path)) raw += line + " ";
  } else {
    raw = std::string(builtin_seed_text());
  }
  std::vector<NormalizedLine> lines;
  std::string sentence;
  for (char c : raw) {
    if (c == '.') {
      const NormalizedLine n = normalize(sentence);
      if (!n.empty()) lines.push_back(n);
      sentence.clear();
    } else {
      sentence.push_back(c);
    }
  }
  const NormalizedLine tail = normalize(sentence);
  if (!tail.empty()) lines.push_back(tail);
  if (lines.empty()) throw std::runtime_error("seed text is empty");
  return lines;
}

NGramModel reference_lm(const RunConfig& cfg, int order, double k) {
  return NGramModel::fit(seed_text_lines(cfg), order, k);
}

std::vector<NormalizedLine> make_corpus(const RunConfig& cfg, int n_lines) {
  if (!cfg.corpus_path.empty()) {
    std::vector<NormalizedLine> lines;
    for (const auto& raw : read_lines(cfg.corpus_path)) {
      lines.push_back(normalize(raw));
    }
    if (lines.empty()) throw std::runtime_error("corpus file is empty");
    return lines;
  }
  const NGramModel lm = reference_lm(cfg, cfg.synth_order, cfg.synth_k);
  return synth_corpus(cfg.seed, n_lines, lm);
}

void emit_run_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  write_text_file(cfg.out_dir + "/run_config.json", cfg.to_json(2) + "\n");
  std::cout << "config digest: " << cfg.digest() << "\n";
}

std::uint64_t file_fnv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return fnv1a64(buf.str());
}

int cmd_corpus(const RunConfig& cfg, const std::string& in_path, bool synth,
               int n_lines, const std::string& out_path) {
  RunConfig local = cfg;
  if (!in_path.empty()) local.corpus_path = in_path;
  if (synth) local.corpus_path.clear();
  const auto lines = make_corpus(local, n_lines);
  std::size_t chars = 0;
  for (const auto& l : lines) chars += l.size();
  write_lines(out_path, lines);
  emit_run_config(cfg);
  std::cout << "wrote " << lines.size() << " lines, " << chars
            << " characters to " << out_path << "\n";
  std::printf("content hash: %016llx\n",
              static_cast<unsigned long long>(file_fnv(out_path)));
  return 0;
}

int cmd_dataset(const RunConfig& cfg, const std::string& corpus_path) {
  RunConfig local = cfg;
  if (!corpus_path.empty()) local.corpus_path = corpus_path;
  const std::size_t train_count =
      static_cast<std::size_t>(4096) * cfg.n_multiplier;
  const std::size_t need = train_count + cfg.test_lines;
  auto corpus = make_corpus(local, static_cast<int>(need));
  if (corpus.size() < need) {
    throw std::runtime_error("corpus has " + std::to_string(corpus.size()) +
                             " lines, need " + std::to_string(need));
  }
  const Vocab vocab;
  const std::vector<NormalizedLine> test_lines(corpus.begin(),
                                               corpus.begin() + cfg.test_lines);
  const std::vector<NormalizedLine> train_lines(
      corpus.begin() + cfg.test_lines,
      corpus.begin() + cfg.test_lines + static_cast<std::ptrdiff_t>(train_count));

  CipherDataset train_set = build_dataset(train_lines, vocab, cfg.seed,
                                          Split::kTrain, cfg.max_len, cfg.pin_space);
  train_set.n_multiplier = cfg.n_multiplier;
  const CipherDataset test_set = build_dataset(test_lines, vocab, cfg.seed,
                                               Split::kTest, cfg.max_len, cfg.pin_space);

  fs::create_directories(cfg.out_dir);
  write_dataset_jsonl(cfg.out_dir + "/train.jsonl", train_set);
  write_dataset_jsonl(cfg.out_dir + "/test.jsonl", test_set);

  nlohmann::ordered_json meta;
  meta["config_digest"] = cfg.digest();
  meta["seed"] = cfg.seed;
  meta["n_multiplier"] = cfg.n_multiplier;
  meta["train_examples"] = train_set.examples.size();
  meta["test_examples"] = test_set.examples.size();
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(file_fnv(cfg.out_dir + "/train.jsonl")));
  meta["train_hash"] = hash;
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(file_fnv(cfg.out_dir + "/test.jsonl")));
  meta["test_hash"] = hash;
  write_text_file(cfg.out_dir + "/dataset_meta.json", meta.dump(2) + "\n");

  emit_run_config(cfg);
  std::cout << "train: " << train_set.examples.size() << " examples, test: "
            << test_set.examples.size() << " examples in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& train_path,
              const std::string& test_path) {
  CipherDataset train_set = read_dataset_jsonl(train_path);
  CipherDataset test_set = read_dataset_jsonl(test_path);

  nn::ModelConfig mc = cfg.model;
  mc.seed = hash64(cfg.seed, 0x4d4f44ull);  // "MOD"
  nn::TrainOptions opts;
  opts.epochs = cfg.epochs;
  opts.batch_size = cfg.batch_size;
  opts.adam = cfg.adam;
  opts.shuffle_seed = hash64(cfg.seed, 0x545249ull);  // "TRI"
  opts.jobs = cfg.jobs;

  fs::create_directories(cfg.out_dir);
  emit_run_config(cfg);
  std::cout << "params: " << nn::count_params(mc) << "\n";

  nn::TrainState state(mc, opts.adam);
  nn::TrainResult result;
  result.initial_test_loss =
      nn::evaluate_test_loss(state.params, test_set, opts.jobs);
  result.best_test_loss = result.initial_test_loss;
  result.best_params = state.params;
  std::printf("initial test loss: %.6f\n", result.initial_test_loss);

  const std::string metrics_path = cfg.out_dir + "/metrics.csv";
  const std::string best_path = cfg.out_dir + "/checkpoint.bin";
  const std::string last_path = cfg.out_dir + "/last.ckpt";

  nn::TrainOptions epoch_opts = opts;
  epoch_opts.epochs = 1;
  for (int e = 0; e < opts.epochs; ++e) {
    nn::train_epochs(state, train_set, test_set, epoch_opts, &result);
    const nn::TrainRecord& rec = result.history.back();
    std::printf("epoch %3d  train %.6f  test %.6f  (%.1fs)\n", rec.epoch,
                rec.train_loss, rec.test_loss, rec.wall_time_s);
    nn::write_metrics_csv(metrics_path, result.history, cfg.digest());
    if (result.best_epoch == rec.epoch) {
      nn::Checkpoint best;
      best.params = result.best_params;
      best.epoch = rec.epoch;
      best.test_loss = rec.test_loss;
      best.config_digest = cfg.digest();
      nn::save_checkpoint(best_path, best);
    }
    nn::Checkpoint last;
    last.params = state.params;
    last.epoch = rec.epoch;
    last.test_loss = rec.test_loss;
    last.config_digest = cfg.digest();
    last.adam_config = opts.adam;
    last.adam_steps = state.adam.steps();
    last.adam_m = state.adam.first_moment();
    last.adam_v = state.adam.second_moment();
    nn::save_checkpoint(last_path, last);
  }
  std::printf("best test loss %.6f at epoch %d\n", result.best_test_loss,
              result.best_epoch);
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& ckpt_path,
             const std::string& dataset_path, int probes) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(ckpt_path);
  const CipherDataset ds = read_dataset_jsonl(dataset_path);
  const NeuralDecipherModel model(ckpt.params);

  const ScaleReport report = hallucination_scale(model, ds);
  const double residual = equivariance_residual(model, ds, probes, cfg.seed);
  const double non_inv = non_invariance_check(model, ds, probes, cfg.seed);

  fs::create_directories(cfg.out_dir);
  emit_run_config(cfg);

  nlohmann::ordered_json j = nlohmann::ordered_json::parse(
      scale_report_to_json(report, cfg.digest()));
  j["equivariance_residual"] = residual;
  j["non_invariance"] = non_inv;
  j["n_probes"] = probes;
  j["checkpoint_epoch"] = ckpt.epoch;
  write_text_file(cfg.out_dir + "/scale_report.json", j.dump(2) + "\n");

  const std::string log_path = cfg.out_dir + "/eval_log.csv";
  const bool fresh = !fs::exists(log_path);
  std::ofstream log(log_path, std::ios::app);
  if (fresh) log << "epoch,mean_ce,symbol_accuracy,exact_match,equivariance_residual,non_invariance\n";
  char buf[220];
  std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g\n", ckpt.epoch,
                report.mean_ce, report.symbol_accuracy, report.exact_match,
                residual, non_inv);
  log << buf;

  std::printf("mean_ce %.6f  symbol_accuracy %.4f  exact_match %.4f\n",
              report.mean_ce, report.symbol_accuracy, report.exact_match);
  std::printf("equivariance_residual %.4f  non_invariance %.4f\n", residual,
              non_inv);
  return 0;
}

int cmd_baseline(const RunConfig& cfg, const std::string& dataset_path) {
  CipherDataset ds = read_dataset_jsonl(dataset_path);
  if (cfg.solver_limit > 0 &&
      ds.examples.size() > static_cast<std::size_t>(cfg.solver_limit)) {
    ds.examples.resize(cfg.solver_limit);
  }
  const NGramModel lm = reference_lm(cfg, cfg.solver_order, cfg.solver_k);

  SolverDecipherModel::Kind kind;
  if (cfg.solver_kind == "frequency") {
    kind = SolverDecipherModel::Kind::kFrequency;
  } else if (cfg.solver_kind == "hillclimb") {
    kind = SolverDecipherModel::Kind::kHillclimb;
  } else {
    throw std::runtime_error("baseline solver must be frequency or hillclimb");
  }
  const SolverDecipherModel model(kind, lm, cfg.solver_budget,
                                  cfg.solver_restarts, cfg.seed);

  ScaleReport report = hallucination_scale(model, ds);
  report.one_hot_epsilon = model.epsilon();

  // per-slot accuracy and mean solver score across examples
  std::array<std::int64_t, kNumContent> slot_correct{};
  double score_sum = 0.0;
  for (const CipherExample& ex : ds.examples) {
    const DecipherOutput out = model.decipher(ex.ciphertext);
    for (int j = 0; j < kNumContent; ++j) {
      if (out.decode_map[j] == ex.decode_target[j]) ++slot_correct[j];
    }
    std::vector<int> map(out.decode_map.begin(), out.decode_map.end());
    score_sum += decode_map_score({ex.ciphertext}, lm, map);
  }

  fs::create_directories(cfg.out_dir);
  emit_run_config(cfg);

  nlohmann::ordered_json j = nlohmann::ordered_json::parse(
      scale_report_to_json(report, cfg.digest()));
  j["solver"] = cfg.solver_kind;
  j["mean_score"] = score_sum / static_cast<double>(ds.examples.size());
  auto first = model.decipher(ds.examples.front().ciphertext);
  j["first_example_decode_map"] = first.decode_map;
  std::vector<double> per_slot(kNumContent);
  for (int s = 0; s < kNumContent; ++s) {
    per_slot[s] = static_cast<double>(slot_correct[s]) / ds.examples.size();
  }
  j["per_slot_accuracy"] = per_slot;
  write_text_file(cfg.out_dir + "/baseline_report.json", j.dump(2) + "\n");

  std::printf("solver %s: mean_ce %.6f  symbol_accuracy %.4f  exact_match %.4f\n",
              cfg.solver_kind.c_str(), report.mean_ce, report.symbol_accuracy,
              report.exact_match);
  return 0;
}

int cmd_sweep(const RunConfig& cfg) {
  SweepOptions opts;
  if (cfg.sweep_axis == "params") {
    opts.axis = SweepAxis::kParams;
  } else if (cfg.sweep_axis == "dataset") {
    opts.axis = SweepAxis::kDataset;
  } else {
    throw std::runtime_error("sweep axis must be params or dataset");
  }
  opts.values = cfg.sweep_values;
  opts.base = cfg.model;
  opts.train.epochs = cfg.sweep_epochs;
  opts.train.batch_size = cfg.batch_size;
  opts.train.adam = cfg.adam;
  opts.train.jobs = cfg.jobs;
  opts.test_lines = cfg.test_lines;
  opts.seed = cfg.seed;

  const int max_mult = opts.axis == SweepAxis::kDataset
                           ? *std::max_element(opts.values.begin(), opts.values.end())
                           : 1;
  const int need = opts.test_lines + opts.lines_per_unit * max_mult;
  const auto corpus = make_corpus(cfg, need);

  fs::create_directories(cfg.out_dir);
  emit_run_config(cfg);

  // sweep manifest
  nlohmann::ordered_json manifest;
  manifest["config_digest"] = cfg.digest();
  manifest["axis"] = cfg.sweep_axis;
  manifest["values"] = cfg.sweep_values;
  manifest["epochs"] = cfg.sweep_epochs;
  manifest["base_model"] = nlohmann::json::parse(nn::model_config_to_json(cfg.model));
  manifest["seed"] = cfg.seed;
  write_text_file(cfg.out_dir + "/sweep_manifest.json", manifest.dump(2) + "\n");

  const auto runs = run_sweep(opts, corpus);
  write_sweep_csv(cfg.out_dir + "/sweep.csv", runs, cfg.digest());
  for (const auto& run : runs) {
    std::printf("%-12s x=%.6g  best test loss %.6f  (%d epochs, %.1fs)\n",
                run.point.run_id.c_str(), run.point.x, run.point.y, run.epochs,
                run.wall_time_s);
    nn::write_metrics_csv(cfg.out_dir + "/metrics_" + run.point.run_id + ".csv",
                          run.history, cfg.digest());
  }

  std::vector<ScalingPoint> points;
  for (const auto& run : runs) points.push_back(run.point);
  if (points.size() >= 2) {
    const PowerLawFit fit = fit_power_law(points);
    nlohmann::ordered_json j;
    j["config_digest"] = cfg.digest();
    j["log10_a"] = fit.log10_a;
    j["b"] = fit.b;
    j["r2"] = fit.r2;
    j["n_points"] = fit.n_points;
    if (fit.b < 0.0) {
      j["x_for_loss_0p1"] = extrapolate_x_for_loss(fit, 0.1);
    }
    write_text_file(cfg.out_dir + "/powerlaw.json", j.dump(2) + "\n");
    std::printf("power law: b=%.4f r2=%.4f\n", fit.b, fit.r2);
    if (fit.b < 0.0) {
      std::printf("extrapolated x for loss 0.1: %.4g\n",
                  extrapolate_x_for_loss(fit, 0.1));
    }
  }
  return 0;
}

int cmd_plot(const RunConfig& cfg, const std::string& kind,
             const std::string& in_path, const std::string& out_path) {
  std::string svg;
  if (kind == "loss_curve") {
    const auto history = nn::read_metrics_csv(in_path);
    if (history.empty()) throw std::runtime_error("metrics CSV is empty");
    svg = loss_curve_svg(history, cfg.digest());
  } else if (kind == "loglog") {
    const auto points = read_sweep_csv(in_path);
    if (points.empty()) throw std::runtime_error("sweep CSV is empty");
    const PowerLawFit fit = fit_power_law(points);
    svg = loglog_svg(points, fit, "x", cfg.digest());
  } else {
    throw std::runtime_error("plot kind must be loss_curve or loglog");
  }
  write_text_file(out_path, svg);
  std::cout << "config digest: " << cfg.digest() << "\n";
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"substitution-cipher decipherment and equivariance scale toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::uint64_t seed_flag = 0;
  std::string out_dir_flag;
  int jobs_flag = 0;
  app.add_option("--config", config_path, "RunConfig JSON file");
  auto* seed_opt = app.add_option("--seed", seed_flag, "master seed");
  auto* out_opt = app.add_option("--out-dir", out_dir_flag, "output directory");
  auto* jobs_opt = app.add_option("--jobs", jobs_flag, "worker threads");

  // corpus
  auto* corpus = app.add_subcommand("corpus", "normalize a raw corpus or synthesize one");
  std::string corpus_in, corpus_out = "corpus.txt";
  bool corpus_synth = false;
  int corpus_lines = 4608;
  corpus->add_option("--in", corpus_in, "raw input file (one document per line)");
  corpus->add_flag("--synth", corpus_synth, "generate a synthetic corpus");
  corpus->add_option("--n-lines", corpus_lines, "lines to synthesize");
  corpus->add_option("--out", corpus_out, "output file");

  // dataset
  auto* dataset = app.add_subcommand("dataset", "build cipher datasets (train/test JSONL)");
  std::string dataset_corpus;
  dataset->add_option("--corpus", dataset_corpus, "normalized corpus file (default: synthesize)");
  int ds_test_lines = -1, ds_mult = -1;
  dataset->add_option("--test-lines", ds_test_lines, "test split size");
  dataset->add_option("--n-multiplier", ds_mult, "training set multiplier N (4096 lines per unit)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train the neural decipherer");
  std::string train_train = "out/train.jsonl", train_test = "out/test.jsonl";
  int train_epochs = -1;
  double train_lr = -1.0;
  int train_dmodel = -1;
  train_cmd->add_option("--train", train_train, "training dataset JSONL");
  train_cmd->add_option("--test", train_test, "test dataset JSONL");
  train_cmd->add_option("--epochs", train_epochs, "epoch count");
  train_cmd->add_option("--lr", train_lr, "Adam learning rate");
  train_cmd->add_option("--d-model", train_dmodel, "model width");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "hallucination scale + equivariance checks");
  std::string eval_ckpt = "out/checkpoint.bin", eval_ds = "out/test.jsonl";
  int eval_probes = 256;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint");
  eval_cmd->add_option("--dataset", eval_ds, "dataset JSONL");
  eval_cmd->add_option("--probes", eval_probes, "equivariance probe count");

  // baseline
  auto* baseline = app.add_subcommand("baseline", "classical solver baselines");
  std::string base_ds = "out/test.jsonl", base_solver;
  baseline->add_option("--dataset", base_ds, "dataset JSONL");
  baseline->add_option("--solver", base_solver, "frequency | hillclimb");
  int base_limit = -1;
  baseline->add_option("--limit", base_limit, "cap the number of examples");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "scaling sweep over params or dataset size");
  std::string sweep_axis;
  std::vector<int> sweep_values;
  int sweep_epochs = -1;
  sweep->add_option("--axis", sweep_axis, "params | dataset");
  sweep->add_option("--values", sweep_values, "swept values")->delimiter(',');
  sweep->add_option("--epochs", sweep_epochs, "epochs per run");

  // plot
  auto* plot = app.add_subcommand("plot", "emit SVG figures from CSV artifacts");
  std::string plot_kind = "loss_curve", plot_in, plot_out = "plot.svg";
  plot->add_option("--kind", plot_kind, "loss_curve | loglog");
  plot->add_option("--in", plot_in, "input CSV")->required();
  plot->add_option("--out", plot_out, "output SVG");

  CLI11_PARSE(app, argc, argv);

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::load(config_path);
    cfg.apply_env();
    if (seed_opt->count() > 0) cfg.seed = seed_flag;
    if (out_opt->count() > 0) cfg.out_dir = out_dir_flag;
    if (jobs_opt->count() > 0) cfg.jobs = jobs_flag;

    const auto problems = cfg.validate();
    if (!problems.empty()) {
      std::cerr << "invalid configuration:\n";
      for (const auto& p : problems) std::cerr << "  " << p << "\n";
      return 1;
    }

    if (corpus->parsed()) {
      if (corpus_in.empty() && !corpus_synth) {
        throw std::runtime_error("corpus: need --in or --synth");
      }
      return cmd_corpus(cfg, corpus_in, corpus_synth, corpus_lines, corpus_out);
    }
    if (dataset->parsed()) {
      if (ds_test_lines >= 0) cfg.test_lines = ds_test_lines;
      if (ds_mult >= 0) cfg.n_multiplier = ds_mult;
      return cmd_dataset(cfg, dataset_corpus);
    }
    if (train_cmd->parsed()) {
      if (train_epochs >= 0) cfg.epochs = train_epochs;
      if (train_lr > 0) cfg.adam.lr = train_lr;
      if (train_dmodel > 0) cfg.model.d_model = train_dmodel;
      return cmd_train(cfg, train_train, train_test);
    }
    if (eval_cmd->parsed()) return cmd_eval(cfg, eval_ckpt, eval_ds, eval_probes);
    if (baseline->parsed()) {
      if (!base_solver.empty()) cfg.solver_kind = base_solver;
      if (base_limit >= 0) cfg.solver_limit = base_limit;
      return cmd_baseline(cfg, base_ds);
    }
    if (sweep->parsed()) {
      if (!sweep_axis.empty()) cfg.sweep_axis = sweep_axis;
      if (!sweep_values.empty()) cfg.sweep_values = sweep_values;
      if (sweep_epochs > 0) cfg.sweep_epochs = sweep_epochs;
      return cmd_sweep(cfg);
    }
    if (plot->parsed()) return cmd_plot(cfg, plot_kind, plot_in, plot_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
