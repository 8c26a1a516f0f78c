#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "cipherscale/dataset.hpp"
#include "cipherscale/nn/adam.hpp"
#include "cipherscale/nn/model.hpp"

namespace cipherscale::nn {

struct TrainRecord {
  int epoch = 0;
  double train_loss = 0.0;  // teacher-forced cross-entropy, nats
  double test_loss = 0.0;   // dictionary-reconstruction scale on the test set
  double wall_time_s = 0.0;
};

struct TrainOptions {
  int epochs = 100;
  int batch_size = 16;
  AdamConfig adam;        // lr 1e-4, betas (0.9, 0.999), eps 1e-8
  std::uint64_t shuffle_seed = 0;
  int jobs = 1;
  // Optional early stop, checked after each epoch's record.
  std::function<bool(const TrainRecord&)> stop_when;
};

// Mutable training state; checkpointing this resumes bit-exactly.
struct TrainState {
  ModelParams<float> params;
  Adam<float> adam;
  int epochs_done = 0;

  TrainState(const ModelConfig& config, const AdamConfig& hp)
      : params(init_model<float>(config)), adam(config, hp) {}
};

struct TrainResult {
  std::vector<TrainRecord> history;
  ModelParams<float> params;       // final
  ModelParams<float> best_params;  // lowest test loss seen
  double best_test_loss = 0.0;
  int best_epoch = 0;
  double initial_test_loss = 0.0;  // before any update
};

// Mean dictionary-reconstruction cross-entropy of greedy decoding over the
// dataset; the same number hallucination_scale reports for this model.
double evaluate_test_loss(const ModelParams<float>& params,
                          const CipherDataset& test_set, int jobs = 1);

// Per-epoch seeded shuffling, batches of batch_size, Adam updates from
// batch-mean gradients. Examples inside a batch are processed (possibly in
// parallel) into per-example gradient buffers and reduced in example order,
// so results are bit-identical for any `jobs`.
TrainResult train(const ModelConfig& config, const CipherDataset& train_set,
                  const CipherDataset& test_set, const TrainOptions& options);

// Continue `options.epochs` more epochs on existing state (resume path).
std::vector<TrainRecord> train_epochs(TrainState& state,
                                      const CipherDataset& train_set,
                                      const CipherDataset& test_set,
                                      const TrainOptions& options,
                                      TrainResult* result = nullptr);

void write_metrics_csv(const std::string& path,
                       const std::vector<TrainRecord>& history,
                       const std::string& config_digest);
std::vector<TrainRecord> read_metrics_csv(const std::string& path);

}  // namespace cipherscale::nn
