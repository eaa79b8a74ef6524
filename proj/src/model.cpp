#include "temp/model.hpp"

#include "temp/world.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <random>

namespace temp {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace names {
std::string eise_enc_w(int layer) { return "eise.enc." + std::to_string(layer) + ".W"; }
std::string eise_enc_b(int layer) { return "eise.enc." + std::to_string(layer) + ".b"; }
std::string eise_dec_w(int layer) { return "eise.dec." + std::to_string(layer) + ".W"; }
std::string eise_dec_b(int layer) { return "eise.dec." + std::to_string(layer) + ".b"; }
std::string layer(std::size_t l, const std::string& leaf) {
  return "mpt.layer" + std::to_string(l) + "." + leaf;
}
std::string head(std::size_t l, std::size_t h, const std::string& leaf) {
  return layer(l, "head" + std::to_string(h) + "." + leaf);
}
}  // namespace names

namespace {

constexpr char kMagic[8] = {'T', 'E', 'M', 'P', 'C', 'K', 'P', 'T'};
constexpr std::size_t kRoleCount = 4;

nlohmann::json config_to_json(const ModelConfig& c) {
  return {{"format_version", ModelBundle::kFormatVersion},
          {"dim", c.dim},
          {"max_obstacles", c.max_obstacles},
          {"d_hidden", c.d_hidden},
          {"eise_two_layer", c.eise_two_layer},
          {"eise_task_conditioning", c.eise_task_conditioning},
          {"d_model", c.attn.d_model},
          {"n_heads", c.attn.n_heads},
          {"n_layers", c.attn.n_layers},
          {"d_ffn", c.attn.d_ffn},
          {"max_seq_len", c.max_seq_len}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.dim = j.at("dim").get<int>();
  c.max_obstacles = j.at("max_obstacles").get<std::size_t>();
  c.d_hidden = j.at("d_hidden").get<std::size_t>();
  c.eise_two_layer = j.at("eise_two_layer").get<bool>();
  c.eise_task_conditioning = j.at("eise_task_conditioning").get<bool>();
  c.attn.d_model = j.at("d_model").get<std::size_t>();
  c.attn.n_heads = j.at("n_heads").get<std::size_t>();
  c.attn.n_layers = j.at("n_layers").get<std::size_t>();
  c.attn.d_ffn = j.at("d_ffn").get<std::size_t>();
  c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
  return c;
}

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw InvalidInput(path + ": truncated checkpoint");
  }
  return v;
}

}  // namespace

void ModelConfig::validate() const {
  if (dim < 1) throw InvalidInput("model: dim must be >= 1");
  if (max_obstacles == 0 || d_hidden == 0) throw InvalidInput("model: sizes must be positive");
  if (max_seq_len < 3) throw InvalidInput("model: max_seq_len must be >= 3");
  attn.validate();
}

ModelBundle::ModelBundle(ModelConfig config, nn::ParameterSet params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
}

ModelBundle ModelBundle::create(const ModelConfig& c, std::uint64_t seed) {
  c.validate();
  std::mt19937_64 rng(seed);
  nn::ParameterSet ps;
  const std::size_t L = c.env_length();
  const std::size_t D = c.attn.d_model;
  const std::size_t d = static_cast<std::size_t>(c.dim);
  auto dense = [&](const std::string& w, const std::string& b, std::size_t in, std::size_t out) {
    ps.add(w, nn::glorot_uniform(in, out, rng));
    ps.add(b, nn::Tensor::vector(std::vector<double>(out, 0.0)));
  };
  if (c.eise_two_layer) {
    dense(names::eise_enc_w(0), names::eise_enc_b(0), L, c.d_hidden);
    dense(names::eise_enc_w(1), names::eise_enc_b(1), c.d_hidden, D);
    dense(names::eise_dec_w(0), names::eise_dec_b(0), D, c.d_hidden);
    dense(names::eise_dec_w(1), names::eise_dec_b(1), c.d_hidden, L);
  } else {
    dense(names::eise_enc_w(0), names::eise_enc_b(0), L, D);
    dense(names::eise_dec_w(0), names::eise_dec_b(0), D, L);
  }
  dense(names::kEmbW, names::kEmbB, d + kRoleCount, D);
  ps.add(names::kPos, nn::glorot_uniform(c.max_seq_len, D, rng));
  const std::size_t dk = c.attn.d_k();
  for (std::size_t l = 0; l < c.attn.n_layers; ++l) {
    for (std::size_t h = 0; h < c.attn.n_heads; ++h) {
      ps.add(names::head(l, h, "Wq"), nn::glorot_uniform(D, dk, rng));
      ps.add(names::head(l, h, "Wk"), nn::glorot_uniform(D, dk, rng));
      ps.add(names::head(l, h, "Wv"), nn::glorot_uniform(D, dk, rng));
    }
    ps.add(names::layer(l, "Wo"), nn::glorot_uniform(dk * c.attn.n_heads, D, rng));
    ps.add(names::layer(l, "ln1.alpha"), nn::Tensor::vector(std::vector<double>(D, 1.0)));
    ps.add(names::layer(l, "ln1.delta"), nn::Tensor::vector(std::vector<double>(D, 0.0)));
    dense(names::layer(l, "ffn.W1"), names::layer(l, "ffn.b1"), D, c.attn.d_ffn);
    dense(names::layer(l, "ffn.W2"), names::layer(l, "ffn.b2"), c.attn.d_ffn, D);
    ps.add(names::layer(l, "ln2.alpha"), nn::Tensor::vector(std::vector<double>(D, 1.0)));
    ps.add(names::layer(l, "ln2.delta"), nn::Tensor::vector(std::vector<double>(D, 0.0)));
  }
  dense(names::kHeadW, names::kHeadB, D, d);
  return ModelBundle(c, std::move(ps));
}

void ModelBundle::save(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidInput(path + ": cannot open for writing");
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kFormatVersion);
  const std::string header = config_to_json(config_).dump();
  put<std::uint64_t>(os, header.size());
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  put<std::uint64_t>(os, params_.size());
  for (const auto& p : params_) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.rank()));
    for (auto s : p.value.shape()) put<std::uint64_t>(os, s);
    os.write(reinterpret_cast<const char*>(p.value.data()),
             static_cast<std::streamsize>(p.value.size() * sizeof(double)));
  }
  if (!os) throw InvalidInput(path + ": write failed");
}

ModelBundle ModelBundle::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InvalidInput(path + ": cannot open checkpoint");
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InvalidInput(path + ": not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(is, path);
  if (version != kFormatVersion) {
    throw InvalidInput(path + ": unsupported format_version " + std::to_string(version));
  }
  std::string header(get<std::uint64_t>(is, path), '\0');
  if (!is.read(header.data(), static_cast<std::streamsize>(header.size()))) {
    throw InvalidInput(path + ": truncated header");
  }
  const ModelConfig config = config_from_json(nlohmann::json::parse(header));
  const auto count = get<std::uint64_t>(is, path);
  nn::ParameterSet ps;
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name(get<std::uint32_t>(is, path), '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(name.size()))) {
      throw InvalidInput(path + ": truncated entry name");
    }
    std::vector<std::size_t> shape(get<std::uint32_t>(is, path));
    std::size_t n = 1;
    for (auto& s : shape) {
      s = get<std::uint64_t>(is, path);
      n *= s;
    }
    std::vector<double> values(n);
    if (!is.read(reinterpret_cast<char*>(values.data()),
                 static_cast<std::streamsize>(n * sizeof(double)))) {
      throw InvalidInput(path + ": truncated values for " + name);
    }
    ps.add(std::move(name), nn::Tensor(std::move(shape), std::move(values)));
  }
  // Shapes must match what the header's architecture would build.
  const auto reference = create(config, 0);
  if (reference.params().size() != ps.size()) {
    throw InvalidInput(path + ": parameter count does not match architecture");
  }
  for (const auto& p : reference.params()) {
    if (!ps.contains(p.name) || !ps.value(p.name).same_shape(p.value)) {
      throw InvalidInput(path + ": missing or misshapen parameter " + p.name);
    }
  }
  return ModelBundle(config, std::move(ps));
}

}  // namespace temp
