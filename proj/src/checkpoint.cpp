#include "cipherscale/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cipherscale::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'C', 'S', 'C', 'K', 'P', 'T', '0', '1'};

void write_tensors(std::ofstream& out, const ModelParams<float>& p) {
  for (const auto& t : tensor_views(p)) {
    out.write(reinterpret_cast<const char*>(t.data),
              static_cast<std::streamsize>(t.size * sizeof(float)));
  }
}

void read_tensors(std::ifstream& in, ModelParams<float>& p) {
  for (auto& t : tensor_views(p)) {
    in.read(reinterpret_cast<char*>(t.data),
            static_cast<std::streamsize>(t.size * sizeof(float)));
  }
  if (!in) throw std::runtime_error("checkpoint: truncated tensor payload");
}

}  // namespace

std::string model_config_to_json(const ModelConfig& c) {
  nlohmann::ordered_json j;
  j["d_model"] = c.d_model;
  j["n_layers_enc"] = c.n_layers_enc;
  j["n_layers_dec"] = c.n_layers_dec;
  j["n_heads"] = c.n_heads;
  j["d_ff"] = c.d_ff;
  j["vocab_size"] = c.vocab_size;
  j["max_src_len"] = c.max_src_len;
  j["tgt_len"] = c.tgt_len;
  j["seed"] = c.seed;
  return j.dump();
}

ModelConfig model_config_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  ModelConfig c;
  c.d_model = j.at("d_model").get<int>();
  c.n_layers_enc = j.at("n_layers_enc").get<int>();
  c.n_layers_dec = j.at("n_layers_dec").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.d_ff = j.at("d_ff").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.max_src_len = j.at("max_src_len").get<int>();
  c.tgt_len = j.at("tgt_len").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  nlohmann::ordered_json header;
  header["config"] = nlohmann::json::parse(model_config_to_json(ckpt.params.config));
  header["epoch"] = ckpt.epoch;
  header["test_loss"] = ckpt.test_loss;
  header["config_digest"] = ckpt.config_digest;
  header["has_adam"] = ckpt.adam_m.has_value();
  if (ckpt.adam_m.has_value()) {
    header["adam_steps"] = ckpt.adam_steps;
    header["adam_lr"] = ckpt.adam_config->lr;
    header["adam_beta1"] = ckpt.adam_config->beta1;
    header["adam_beta2"] = ckpt.adam_config->beta2;
    header["adam_eps"] = ckpt.adam_config->eps;
  }
  const std::string header_text = header.dump();

  // Write to a temp file and rename, so an interrupted save never clobbers
  // the previous checkpoint.
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(kMagic, sizeof(kMagic));
    const std::uint32_t len = static_cast<std::uint32_t>(header_text.size());
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    write_tensors(out, ckpt.params);
    if (ckpt.adam_m.has_value()) {
      write_tensors(out, *ckpt.adam_m);
      write_tensors(out, *ckpt.adam_v);
    }
    if (!out) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  std::uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_text(len, '\0');
  in.read(header_text.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(header_text);

  Checkpoint ckpt;
  const ModelConfig config = model_config_from_json(header.at("config").dump());
  ckpt.params = allocate_model<float>(config);
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.test_loss = header.at("test_loss").get<double>();
  ckpt.config_digest = header.value("config_digest", std::string());
  read_tensors(in, ckpt.params);
  if (header.value("has_adam", false)) {
    AdamConfig hp;
    hp.lr = header.at("adam_lr").get<double>();
    hp.beta1 = header.at("adam_beta1").get<double>();
    hp.beta2 = header.at("adam_beta2").get<double>();
    hp.eps = header.at("adam_eps").get<double>();
    ckpt.adam_config = hp;
    ckpt.adam_steps = header.at("adam_steps").get<std::int64_t>();
    ckpt.adam_m = allocate_model<float>(config);
    ckpt.adam_v = allocate_model<float>(config);
    read_tensors(in, *ckpt.adam_m);
    read_tensors(in, *ckpt.adam_v);
  }
  return ckpt;
}

}  // namespace cipherscale::nn
