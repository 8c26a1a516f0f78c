#include "cipherscale/scaling.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "cipherscale/dataset.hpp"
#include "cipherscale/rng.hpp"

namespace cipherscale {

PowerLawFit fit_power_law(const std::vector<ScalingPoint>& points) {
  if (points.size() < 2) throw std::invalid_argument("fit_power_law: need >= 2 points");
  std::set<double> xs;
  for (const ScalingPoint& p : points) {
    if (!(p.x > 0.0) || !(p.y > 0.0)) {
      throw std::invalid_argument("fit_power_law: x and y must be positive");
    }
    xs.insert(p.x);
  }
  if (xs.size() != points.size()) {
    throw std::invalid_argument("fit_power_law: x values must be distinct");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(n, 2);
  Eigen::VectorXd ly(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    design(i, 0) = 1.0;
    design(i, 1) = std::log10(points[i].x);
    ly(i) = std::log10(points[i].y);
  }
  const Eigen::Vector2d beta = design.colPivHouseholderQr().solve(ly);

  const Eigen::VectorXd resid = ly - design * beta;
  const double ss_res = resid.squaredNorm();
  const double mean = ly.mean();
  const double ss_tot = (ly.array() - mean).square().sum();

  PowerLawFit fit;
  fit.log10_a = beta(0);
  fit.b = beta(1);
  fit.n_points = static_cast<int>(n);
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

double extrapolate_x_for_loss(const PowerLawFit& fit, double target_loss) {
  if (!(target_loss > 0.0)) {
    throw std::invalid_argument("extrapolate_x_for_loss: target must be > 0");
  }
  if (!(fit.b < 0.0)) {
    throw std::domain_error(
        "extrapolate_x_for_loss: exponent is not negative; loss is not "
        "decreasing in x and the extrapolation is meaningless");
  }
  return std::pow(10.0, (std::log10(target_loss) - fit.log10_a) / fit.b);
}

std::int64_t tokens_for_multiplier(std::int64_t n, std::int64_t lines_per_unit,
                                   std::int64_t tokens_per_line) {
  if (n < 1) throw std::invalid_argument("tokens_for_multiplier: n must be >= 1");
  return n * lines_per_unit * tokens_per_line;
}

std::vector<SweepRun> run_sweep(const SweepOptions& options,
                                const std::vector<NormalizedLine>& corpus) {
  if (options.values.empty()) throw std::invalid_argument("run_sweep: no values");
  std::set<int> distinct(options.values.begin(), options.values.end());
  if (distinct.size() != options.values.size()) {
    throw std::invalid_argument("run_sweep: values must be distinct");
  }

  const Vocab vocab;
  const int max_mult =
      options.axis == SweepAxis::kDataset
          ? *std::max_element(options.values.begin(), options.values.end())
          : 1;
  const std::size_t needed = static_cast<std::size_t>(options.test_lines) +
                             static_cast<std::size_t>(options.lines_per_unit) * max_mult;
  if (corpus.size() < needed) {
    throw std::invalid_argument("run_sweep: corpus too small for the requested grid");
  }

  const std::vector<NormalizedLine> test_lines(corpus.begin(),
                                               corpus.begin() + options.test_lines);

  std::vector<SweepRun> runs;
  for (std::size_t vi = 0; vi < options.values.size(); ++vi) {
    const int value = options.values[vi];
    nn::ModelConfig config = options.base;
    int n_mult = 1;
    std::string run_id;
    if (options.axis == SweepAxis::kParams) {
      config.d_model = value;
      run_id = "params_d" + std::to_string(value);
    } else {
      n_mult = value;
      run_id = "data_n" + std::to_string(value);
    }
    config.seed = hash64(options.seed, 0x53574545ull, vi);  // per-run init seed
    config.validate();

    const std::size_t train_count =
        static_cast<std::size_t>(options.lines_per_unit) * n_mult;
    const std::vector<NormalizedLine> train_lines(
        corpus.begin() + options.test_lines,
        corpus.begin() + options.test_lines + static_cast<std::ptrdiff_t>(train_count));

    CipherDataset train_set =
        build_dataset(train_lines, vocab, hash64(options.seed, 1, vi), Split::kTrain);
    train_set.n_multiplier = n_mult;
    const CipherDataset test_set =
        build_dataset(test_lines, vocab, hash64(options.seed, 2), Split::kTest);

    nn::TrainOptions topts = options.train;
    topts.shuffle_seed = hash64(options.seed, 3, vi);

    const auto t0 = std::chrono::steady_clock::now();
    const nn::TrainResult result = nn::train(config, train_set, test_set, topts);

    SweepRun run;
    run.point.run_id = run_id;
    run.point.x = options.axis == SweepAxis::kParams
                      ? static_cast<double>(nn::count_params(config))
                      : static_cast<double>(n_mult);
    run.point.y = result.best_test_loss;
    run.history = result.history;
    run.epochs = static_cast<int>(result.history.size());
    run.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    runs.push_back(std::move(run));
  }
  return runs;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRun>& runs,
                     const std::string& config_digest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  if (!config_digest.empty()) out << "# config_digest=" << config_digest << "\n";
  out << "run_id,x,y,epochs,wall_time_s\n";
  char buf[200];
  for (const SweepRun& r : runs) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%d,%.3f\n",
                  r.point.run_id.c_str(), r.point.x, r.point.y, r.epochs,
                  r.wall_time_s);
    out << buf;
  }
}

std::vector<ScalingPoint> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ScalingPoint> points;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("run_id,", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("bad sweep row: " + line);
    ScalingPoint p;
    p.run_id = line.substr(0, comma);
    if (std::sscanf(line.c_str() + comma + 1, "%lf,%lf", &p.x, &p.y) != 2) {
      throw std::runtime_error("bad sweep row: " + line);
    }
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace cipherscale
