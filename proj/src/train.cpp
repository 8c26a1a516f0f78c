#include "cipherscale/nn/train.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "cipherscale/rng.hpp"
#include "cipherscale/scale.hpp"

namespace cipherscale::nn {

namespace {

// Static index partition over [0, n): worker w handles i with i % jobs == w.
// Outputs land in per-index slots, so scheduling never affects results.
void parallel_for(int n, int jobs, const std::function<void(int, int)>& body) {
  jobs = std::max(1, std::min(jobs, n));
  if (jobs == 1) {
    for (int i = 0; i < n; ++i) body(i, 0);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w]() {
      for (int i = w; i < n; i += jobs) body(i, w);
    });
  }
  for (auto& t : workers) t.join();
}

void check_dataset(const ModelConfig& config, const CipherDataset& ds,
                   const char* which) {
  for (const CipherExample& ex : ds.examples) {
    if (static_cast<int>(ex.ciphertext.size()) > config.max_src_len) {
      throw std::invalid_argument(std::string(which) +
                                  ": example exceeds max_src_len");
    }
    for (int id : ex.ciphertext) {
      if (id < 0 || id >= config.vocab_size) {
        throw std::invalid_argument(std::string(which) + ": token id out of range");
      }
    }
  }
}

}  // namespace

double evaluate_test_loss(const ModelParams<float>& params,
                          const CipherDataset& test_set, int jobs) {
  const int n = static_cast<int>(test_set.examples.size());
  if (n == 0) throw std::invalid_argument("evaluate_test_loss: empty test set");
  std::vector<double> ce(n, 0.0);
  parallel_for(n, jobs, [&](int i, int) {
    const CipherExample& ex = test_set.examples[i];
    const DictionaryPrediction pred = predict_dictionary(params, ex.ciphertext);
    double s = 0.0;
    for (int j = 0; j < kNumContent; ++j) {
      s += -std::log(pred.slot_probs(j, ex.decode_target[j]));
    }
    ce[i] = s / kNumContent;
  });
  double total = 0.0;
  for (double v : ce) total += v;
  return total / n;
}

std::vector<TrainRecord> train_epochs(TrainState& state,
                                      const CipherDataset& train_set,
                                      const CipherDataset& test_set,
                                      const TrainOptions& options,
                                      TrainResult* result) {
  const ModelConfig& config = state.params.config;
  if (train_set.examples.empty()) throw std::invalid_argument("train: empty train set");
  check_dataset(config, train_set, "train set");
  check_dataset(config, test_set, "test set");
  if (options.batch_size < 1) throw std::invalid_argument("train: batch_size >= 1");

  const int n = static_cast<int>(train_set.examples.size());
  const int jobs = std::max(1, options.jobs);
  const Mat<float> pe =
      sinusoidal_positions<float>(config.max_src_len, config.d_model);

  // One gradient buffer per batch slot; merged in slot order.
  std::vector<ModelParams<float>> slot_grads;
  slot_grads.reserve(options.batch_size);
  for (int b = 0; b < options.batch_size; ++b) {
    slot_grads.push_back(zeros_like(state.params));
  }
  ModelParams<float> batch_grad = zeros_like(state.params);

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  std::vector<TrainRecord> records;
  for (int e = 0; e < options.epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    const int epoch = state.epochs_done + 1;

    // batch order is a pure function of (seed, epoch) so resumes reproduce it
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(hash64(options.shuffle_seed, 0x53485546ull,
                           static_cast<std::uint64_t>(epoch)));
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.next_below(static_cast<std::uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    double loss_sum = 0.0;
    for (int start = 0; start < n; start += options.batch_size) {
      const int bsz = std::min(options.batch_size, n - start);
      std::vector<double> losses(bsz, 0.0);
      parallel_for(bsz, jobs, [&](int b, int) {
        const CipherExample& ex = train_set.examples[order[start + b]];
        set_zero(slot_grads[b]);
        losses[b] = example_forward_backward(state.params, ex.ciphertext,
                                             ex.decode_target, pe, slot_grads[b]);
      });
      set_zero(batch_grad);
      for (int b = 0; b < bsz; ++b) {
        accumulate(batch_grad, slot_grads[b]);
        loss_sum += losses[b];
      }
      scale_params(batch_grad, 1.0f / static_cast<float>(bsz));

      double batch_loss = 0.0;
      for (int b = 0; b < bsz; ++b) batch_loss += losses[b];
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: non-finite batch loss at epoch " +
                                 std::to_string(epoch));
      }
      state.adam.step(state.params, batch_grad);
    }

    TrainRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / n;
    rec.test_loss = evaluate_test_loss(state.params, test_set, jobs);
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.epochs_done = epoch;
    records.push_back(rec);

    if (result != nullptr) {
      result->history.push_back(rec);
      if (rec.test_loss < result->best_test_loss) {
        result->best_test_loss = rec.test_loss;
        result->best_epoch = epoch;
        result->best_params = state.params;
      }
    }
    if (options.stop_when && options.stop_when(rec)) break;
  }
  return records;
}

TrainResult train(const ModelConfig& config, const CipherDataset& train_set,
                  const CipherDataset& test_set, const TrainOptions& options) {
  config.validate();
  TrainState state(config, options.adam);

  TrainResult result;
  result.initial_test_loss =
      evaluate_test_loss(state.params, test_set, std::max(1, options.jobs));
  result.best_test_loss = result.initial_test_loss;
  result.best_epoch = 0;
  result.best_params = state.params;

  train_epochs(state, train_set, test_set, options, &result);
  result.params = std::move(state.params);
  return result;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<TrainRecord>& history,
                       const std::string& config_digest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (!config_digest.empty()) out << "# config_digest=" << config_digest << "\n";
  out << "epoch,train_loss,test_loss,wall_time_s\n";
  char buf[160];
  for (const TrainRecord& r : history) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.3f\n", r.epoch,
                  r.train_loss, r.test_loss, r.wall_time_s);
    out << buf;
  }
}

std::vector<TrainRecord> read_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<TrainRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("epoch,", 0) == 0) continue;
    TrainRecord r;
    if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &r.epoch, &r.train_loss,
                    &r.test_loss, &r.wall_time_s) != 4) {
      throw std::runtime_error("bad metrics row: " + line);
    }
    records.push_back(r);
  }
  return records;
}

}  // namespace cipherscale::nn
