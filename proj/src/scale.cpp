#include "cipherscale/scale.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "cipherscale/rng.hpp"

namespace cipherscale {

ScaleReport hallucination_scale(const DecipherModel& model,
                                const CipherDataset& dataset) {
  if (dataset.examples.empty()) {
    throw std::invalid_argument("hallucination_scale: empty dataset");
  }
  double ce_sum = 0.0;
  std::int64_t correct = 0;
  std::int64_t exact = 0;
  for (const CipherExample& ex : dataset.examples) {
    const DecipherOutput out = model.decipher(ex.ciphertext);
    if (!out.slot_probs.has_value()) {
      throw std::invalid_argument(
          "hallucination_scale: model must provide belief rows");
    }
    bool all = true;
    for (int j = 0; j < kNumContent; ++j) {
      ce_sum += -std::log((*out.slot_probs)(j, ex.decode_target[j]));
      if (out.decode_map[j] == ex.decode_target[j]) {
        ++correct;
      } else {
        all = false;
      }
    }
    if (all) ++exact;
  }
  ScaleReport report;
  report.n_examples = static_cast<int>(dataset.examples.size());
  report.mean_ce = ce_sum / (static_cast<double>(report.n_examples) * kNumContent);
  report.symbol_accuracy = static_cast<double>(correct) /
                           (static_cast<double>(report.n_examples) * kNumContent);
  report.exact_match = static_cast<double>(exact) / report.n_examples;
  return report;
}

namespace {

// Deterministic probe stream: example index cycles, the probe permutation
// comes from a counter-mode seed.
struct Probe {
  const CipherExample* example;
  Permutation h;
};

Probe make_probe(const CipherDataset& dataset, int i, std::uint64_t seed,
                 bool skip_identity) {
  Probe p;
  p.example = &dataset.examples[static_cast<std::size_t>(i) % dataset.examples.size()];
  std::uint64_t salt = 0;
  for (;;) {
    p.h = sample_permutation(hash64(seed, 0x50524f4245ull + salt, static_cast<std::uint64_t>(i)));
    if (!skip_identity || !(p.h == identity_permutation())) break;
    ++salt;
  }
  return p;
}

}  // namespace

int relabel_violations(const std::array<int, kNumContent>& map_relabeled,
                       const std::array<int, kNumContent>& map_base,
                       const Permutation& h) {
  const Permutation hinv = invert(h);
  int violated = 0;
  for (int j = 0; j < kNumContent; ++j) {
    const int pre_slot = hinv.map[j] - kFirstContentId;
    if (map_relabeled[j] != map_base[pre_slot]) ++violated;
  }
  return violated;
}

double equivariance_residual(const DecipherModel& model,
                             const CipherDataset& dataset, int n_probes,
                             std::uint64_t seed) {
  if (n_probes < 1) throw std::invalid_argument("equivariance_residual: n_probes >= 1");
  if (dataset.examples.empty()) {
    throw std::invalid_argument("equivariance_residual: empty dataset");
  }

  // Base outputs per distinct example, computed once.
  const std::size_t n_base =
      std::min<std::size_t>(dataset.examples.size(), static_cast<std::size_t>(n_probes));
  std::vector<std::array<int, kNumContent>> base(n_base);
  for (std::size_t e = 0; e < n_base; ++e) {
    base[e] = model.decipher(dataset.examples[e].ciphertext).decode_map;
  }

  double violated_total = 0.0;
  for (int i = 0; i < n_probes; ++i) {
    const Probe probe = make_probe(dataset, i, seed, /*skip_identity=*/false);
    const auto& m2 = base[static_cast<std::size_t>(i) % n_base];
    const auto m1 =
        model.decipher(permute(probe.h, probe.example->ciphertext)).decode_map;
    violated_total +=
        static_cast<double>(relabel_violations(m1, m2, probe.h)) / kNumContent;
  }
  return violated_total / n_probes;
}

double non_invariance_check(const DecipherModel& model,
                            const CipherDataset& dataset, int n_probes,
                            std::uint64_t seed) {
  if (n_probes < 1) throw std::invalid_argument("non_invariance_check: n_probes >= 1");
  if (dataset.examples.empty()) {
    throw std::invalid_argument("non_invariance_check: empty dataset");
  }
  const std::size_t n_base =
      std::min<std::size_t>(dataset.examples.size(), static_cast<std::size_t>(n_probes));
  std::vector<std::array<int, kNumContent>> base(n_base);
  for (std::size_t e = 0; e < n_base; ++e) {
    base[e] = model.decipher(dataset.examples[e].ciphertext).decode_map;
  }
  int changed = 0;
  for (int i = 0; i < n_probes; ++i) {
    const Probe probe = make_probe(dataset, i, seed, /*skip_identity=*/true);
    const auto m1 =
        model.decipher(permute(probe.h, probe.example->ciphertext)).decode_map;
    if (m1 != base[static_cast<std::size_t>(i) % n_base]) ++changed;
  }
  return static_cast<double>(changed) / n_probes;
}

DecipherOutput NeuralDecipherModel::decipher(const TokenSeq& ciphertext) const {
  const nn::DictionaryPrediction pred = nn::predict_dictionary(*params_, ciphertext);
  DecipherOutput out;
  out.decode_map = pred.decode_map;
  out.slot_probs = pred.slot_probs;
  return out;
}

Eigen::MatrixXd one_hot_rows(const std::array<int, kNumContent>& decode_map,
                             double epsilon) {
  Eigen::MatrixXd rows(kNumContent, kVocabSize);
  rows.setConstant(epsilon / (kVocabSize - 1));
  for (int j = 0; j < kNumContent; ++j) {
    rows(j, decode_map[j]) = 1.0 - epsilon;
  }
  return rows;
}

SolverDecipherModel::SolverDecipherModel(Kind kind, const NGramModel& lm,
                                         std::int64_t budget, int restarts,
                                         std::uint64_t seed, double epsilon)
    : kind_(kind), lm_(&lm), budget_(budget), restarts_(restarts), seed_(seed),
      epsilon_(epsilon) {
  if (lm.alphabet_size() != kNumContent) {
    throw std::invalid_argument(
        "SolverDecipherModel: scale interface needs the full 27-symbol alphabet");
  }
}

DecipherOutput SolverDecipherModel::decipher(const TokenSeq& ciphertext) const {
  const std::vector<TokenSeq> pool = {ciphertext};
  SolverResult res;
  if (kind_ == Kind::kFrequency) {
    res = frequency_decipher(pool, *lm_);
  } else {
    res = hillclimb_decipher(pool, *lm_, budget_, restarts_,
                             hash64(seed_, 0x534f4c56ull));
  }
  DecipherOutput out;
  for (int j = 0; j < kNumContent; ++j) out.decode_map[j] = res.decode_map[j];
  out.slot_probs = one_hot_rows(out.decode_map, epsilon_);
  return out;
}

std::string scale_report_to_json(const ScaleReport& report,
                                 const std::string& config_digest) {
  nlohmann::ordered_json j;
  j["mean_ce"] = report.mean_ce;
  j["symbol_accuracy"] = report.symbol_accuracy;
  j["exact_match"] = report.exact_match;
  j["n_examples"] = report.n_examples;
  j["one_hot_epsilon"] = report.one_hot_epsilon;
  j["config_digest"] = config_digest;
  return j.dump(2);
}

}  // namespace cipherscale
