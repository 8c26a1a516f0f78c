#include "cipherscale/ngram.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace cipherscale {

NGramModel NGramModel::fit(const std::vector<NormalizedLine>& corpus, int order,
                           double k, std::vector<int> alphabet) {
  if (corpus.empty()) throw std::invalid_argument("NGramModel::fit: empty corpus");
  if (order < 1 || order > 3) throw std::invalid_argument("NGramModel::fit: order must be 1..3");
  if (!(k > 0.0)) throw std::invalid_argument("NGramModel::fit: k must be > 0");

  NGramModel m;
  m.order_ = order;
  m.k_ = k;
  if (alphabet.empty()) {
    for (int id = kFirstContentId; id < kVocabSize; ++id) alphabet.push_back(id);
  }
  std::sort(alphabet.begin(), alphabet.end());
  m.alphabet_ = std::move(alphabet);

  std::fill(std::begin(m.alpha_pos_), std::end(m.alpha_pos_), -1);
  for (std::size_t a = 0; a < m.alphabet_.size(); ++a) {
    const int id = m.alphabet_[a];
    if (!is_content_id(id)) throw std::invalid_argument("NGramModel::fit: alphabet must be content ids");
    m.alpha_pos_[id] = static_cast<int>(a);
  }

  const int A = m.alphabet_size();
  const int B = A + 1;
  m.n_ctx_ = 1;
  for (int i = 0; i < order - 1; ++i) m.n_ctx_ *= B;
  m.counts_.assign(static_cast<std::size_t>(m.n_ctx_) * A, 0);
  m.ctx_totals_.assign(m.n_ctx_, 0);

  for (const NormalizedLine& line : corpus) {
    int ctx = 0;  // all BOS filler
    for (char c : line) {
      const int a = m.alpha_pos(Vocab::content_id(c));
      if (a < 0) throw std::invalid_argument("NGramModel::fit: symbol outside alphabet");
      m.counts_[static_cast<std::size_t>(ctx) * A + a] += 1;
      m.ctx_totals_[ctx] += 1;
      ctx = m.roll_context(ctx, a);
    }
  }

  m.finalize_tables();
  return m;
}

void NGramModel::finalize_tables() {
  const int A = alphabet_size();
  logp_.assign(counts_.size(), 0.0);
  for (int ctx = 0; ctx < n_ctx_; ++ctx) {
    const double denom = static_cast<double>(ctx_totals_[ctx]) + k_ * A;
    for (int a = 0; a < A; ++a) {
      const std::size_t i = static_cast<std::size_t>(ctx) * A + a;
      logp_[i] = std::log((static_cast<double>(counts_[i]) + k_) / denom);
    }
  }

  std::vector<std::int64_t> sym_totals(A, 0);
  std::int64_t total = 0;
  for (int ctx = 0; ctx < n_ctx_; ++ctx) {
    for (int a = 0; a < A; ++a) {
      sym_totals[a] += counts_[static_cast<std::size_t>(ctx) * A + a];
    }
  }
  for (int a = 0; a < A; ++a) total += sym_totals[a];
  log_unigram_.assign(A, 0.0);
  const double denom = static_cast<double>(total) + k_ * A;
  for (int a = 0; a < A; ++a) {
    log_unigram_[a] = std::log((static_cast<double>(sym_totals[a]) + k_) / denom);
  }
}

double NGramModel::log_likelihood(const TokenSeq& seq) const {
  if (order_ == 0) throw std::logic_error("NGramModel: not fitted");
  double ll = 0.0;
  int ctx = 0;
  for (int id : seq) {
    if (id == kBosId) continue;
    if (id == kEosId) break;
    const int a = alpha_pos(id);
    if (a < 0) throw std::invalid_argument("NGramModel::log_likelihood: symbol outside alphabet");
    ll += log_prob(ctx, a);
    ctx = roll_context(ctx, a);
  }
  return ll;
}

int NGramModel::sample(std::span<const int> recent_ids, Rng& rng,
                       bool allow_space) const {
  const int A = alphabet_size();
  int ctx = 0;
  const std::size_t n_ctx_syms =
      std::min(recent_ids.size(), static_cast<std::size_t>(order_ - 1));
  for (std::size_t i = recent_ids.size() - n_ctx_syms; i < recent_ids.size(); ++i) {
    const int a = alpha_pos(recent_ids[i]);
    if (a < 0) throw std::invalid_argument("NGramModel::sample: symbol outside alphabet");
    ctx = roll_context(ctx, a);
  }

  const int space_pos = alpha_pos(kSpaceId);
  double total = 0.0;
  for (int a = 0; a < A; ++a) {
    if (!allow_space && a == space_pos) continue;
    total += std::exp(log_prob(ctx, a));
  }
  const double u = rng.next_double() * total;
  double cum = 0.0;
  int last = -1;
  for (int a = 0; a < A; ++a) {
    if (!allow_space && a == space_pos) continue;
    cum += std::exp(log_prob(ctx, a));
    last = a;
    if (u < cum) return alphabet_[a];
  }
  return alphabet_[last];  // u landed on the rounding tail
}

std::string NGramModel::to_json() const {
  nlohmann::ordered_json j;
  j["order"] = order_;
  j["k"] = k_;
  j["alphabet"] = alphabet_;
  j["counts"] = counts_;
  return j.dump();
}

NGramModel NGramModel::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NGramModel m;
  m.order_ = j.at("order").get<int>();
  m.k_ = j.at("k").get<double>();
  m.alphabet_ = j.at("alphabet").get<std::vector<int>>();
  std::fill(std::begin(m.alpha_pos_), std::end(m.alpha_pos_), -1);
  for (std::size_t a = 0; a < m.alphabet_.size(); ++a) {
    m.alpha_pos_[m.alphabet_[a]] = static_cast<int>(a);
  }
  const int A = m.alphabet_size();
  const int B = A + 1;
  m.n_ctx_ = 1;
  for (int i = 0; i < m.order_ - 1; ++i) m.n_ctx_ *= B;
  m.counts_ = j.at("counts").get<std::vector<std::int64_t>>();
  if (m.counts_.size() != static_cast<std::size_t>(m.n_ctx_) * A) {
    throw std::invalid_argument("NGramModel::from_json: counts size mismatch");
  }
  m.ctx_totals_.assign(m.n_ctx_, 0);
  for (int ctx = 0; ctx < m.n_ctx_; ++ctx) {
    for (int a = 0; a < A; ++a) {
      m.ctx_totals_[ctx] += m.counts_[static_cast<std::size_t>(ctx) * A + a];
    }
  }
  m.finalize_tables();
  return m;
}

bool NGramModel::operator==(const NGramModel& other) const {
  return order_ == other.order_ && k_ == other.k_ &&
         alphabet_ == other.alphabet_ && counts_ == other.counts_;
}

}  // namespace cipherscale
