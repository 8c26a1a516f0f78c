#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cipherscale/ngram.hpp"
#include "cipherscale/nn/train.hpp"
#include "cipherscale/textcorpus.hpp"

namespace cipherscale {

// One sweep measurement: x is a parameter count, dataset multiplier, or
// token count; y is the run's best (minimum) test loss in nats.
struct ScalingPoint {
  double x = 0.0;
  double y = 0.0;
  std::string run_id;
};

// y = a * x^b fitted by ordinary least squares in log10-log10 space.
struct PowerLawFit {
  double log10_a = 0.0;
  double b = 0.0;
  double r2 = 0.0;
  int n_points = 0;
};

PowerLawFit fit_power_law(const std::vector<ScalingPoint>& points);

// Solves target = a * x^b for x. Requires b < 0 (a loss that is not
// decreasing cannot be extrapolated to a smaller target).
double extrapolate_x_for_loss(const PowerLawFit& fit, double target_loss);

// Token accounting at the 512-token cap: n * lines_per_unit * tokens_per_line.
std::int64_t tokens_for_multiplier(std::int64_t n,
                                   std::int64_t lines_per_unit = 4096,
                                   std::int64_t tokens_per_line = 512);

enum class SweepAxis { kParams, kDataset };

struct SweepOptions {
  SweepAxis axis = SweepAxis::kParams;
  std::vector<int> values;          // d_model values, or dataset multipliers N
  nn::ModelConfig base;             // fixed hyperparameters
  nn::TrainOptions train;           // budget: epochs etc.
  int lines_per_unit = 4096;
  int test_lines = 512;
  std::uint64_t seed = 0;
};

struct SweepRun {
  ScalingPoint point;
  std::vector<nn::TrainRecord> history;
  double wall_time_s = 0.0;
  int epochs = 0;
};

// Trains one model per value with everything else fixed. The corpus must
// hold test_lines + lines_per_unit * max(values) lines for the dataset
// axis, or test_lines + lines_per_unit for the params axis; runs slice it
// deterministically (test first, then training lines).
std::vector<SweepRun> run_sweep(const SweepOptions& options,
                                const std::vector<NormalizedLine>& corpus);

void write_sweep_csv(const std::string& path, const std::vector<SweepRun>& runs,
                     const std::string& config_digest);
std::vector<ScalingPoint> read_sweep_csv(const std::string& path);

}  // namespace cipherscale
