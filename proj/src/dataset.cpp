#include "cipherscale/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "cipherscale/rng.hpp"

namespace cipherscale {

CipherDataset build_dataset(const std::vector<NormalizedLine>& corpus,
                            const Vocab& vocab, std::uint64_t seed, Split split,
                            int max_len, bool pin_space) {
  if (corpus.empty()) throw std::invalid_argument("build_dataset: empty corpus");
  CipherDataset ds;
  ds.seed = seed;
  ds.split = split;
  ds.n_multiplier = static_cast<int>((corpus.size() + 4095) / 4096);
  ds.examples.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::uint64_t perm_seed = hash64(seed, split_tag(split), i);
    const Permutation perm = sample_permutation(perm_seed, pin_space);
    const Permutation inv = invert(perm);
    CipherExample ex;
    ex.ciphertext = permute(perm, encode(corpus[i], vocab, max_len));
    for (int j = 0; j < kNumContent; ++j) ex.decode_target[j] = inv.map[j];
    ex.perm_seed = perm_seed;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

void write_dataset_jsonl(const std::string& path, const CipherDataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const CipherExample& ex : ds.examples) {
    nlohmann::ordered_json j;
    j["ciphertext"] = ex.ciphertext;
    j["decode_target"] = ex.decode_target;
    j["perm_seed"] = ex.perm_seed;
    out << j.dump() << '\n';
  }
}

CipherDataset read_dataset_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  CipherDataset ds;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    CipherExample ex;
    ex.ciphertext = j.at("ciphertext").get<TokenSeq>();
    const auto target = j.at("decode_target").get<std::vector<int>>();
    if (target.size() != kNumContent) {
      throw std::invalid_argument("read_dataset_jsonl: decode_target must have 27 entries");
    }
    std::copy(target.begin(), target.end(), ex.decode_target.begin());
    ex.perm_seed = j.at("perm_seed").get<std::uint64_t>();
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

}  // namespace cipherscale
