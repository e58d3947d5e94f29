#include "orderlens/encoder.hpp"

#include <cmath>
#include <fstream>
#include <unordered_set>

#include "binary_io.hpp"

namespace orderlens {

void EncoderConfig::validate() const {
  if (dim < 2) throw ConfigError("encoder dim must be at least 2");
  if (n_buckets < 256) throw ConfigError("encoder n_buckets must be at least 256");
  if (max_tokens < 1) throw ConfigError("encoder max_tokens must be at least 1");
  if (n_buckets > 0xffffffffULL || dim > 0xffffffffULL)
    throw ConfigError("encoder dimensions exceed 32-bit checkpoint fields");
}

EncoderParams zero_params(const EncoderConfig& config) {
  config.validate();
  return {config.n_buckets, config.dim, std::vector<float>(config.n_buckets * config.dim, 0.0f)};
}

EncoderParams random_params(const EncoderConfig& config, std::uint64_t seed) {
  EncoderParams p = zero_params(config);
  Rng rng(seed);
  const double bound = 0.5 / std::sqrt(static_cast<double>(config.dim));
  for (auto& w : p.table) w = static_cast<float>(rng.uniform(-bound, bound));
  return p;
}

EmbeddingVector sentinel_embedding(std::size_t dim) {
  EmbeddingVector e{std::vector<double>(dim, 0.0)};
  if (dim > 0) e.values[0] = 1.0;
  return e;
}

namespace {

constexpr std::uint64_t kBigramSalt = 0x5bd1e9955bd1e995ULL;

bool is_token_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
}

struct Forward {
  std::vector<double> pooled;
  double norm = 0.0;
  bool sentinel = true;
};

Forward pool(std::span<const std::uint32_t> ids, const EncoderParams& params) {
  Forward f;
  f.pooled.assign(params.dim, 0.0);
  if (ids.empty()) return f;
  for (auto id : ids) {
    auto row = params.row(id);
    for (std::size_t c = 0; c < params.dim; ++c) f.pooled[c] += static_cast<double>(row[c]);
  }
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (auto& x : f.pooled) x *= inv;
  f.norm = l2_norm(f.pooled);
  f.sentinel = !(f.norm > 0.0) || !std::isfinite(f.norm);
  return f;
}

void write_normalized(const Forward& f, std::span<double> out) {
  if (f.sentinel) {
    std::fill(out.begin(), out.end(), 0.0);
    out[0] = 1.0;
    return;
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = f.pooled[c] / f.norm;
}

void require_shape(const EncoderParams& params, const EncoderConfig& config) {
  if (!params.matches(config))
    throw ContractViolation("encoder params shape does not match config");
}

}  // namespace

std::vector<std::uint32_t> tokenize(std::string_view text, const EncoderConfig& config) {
  std::vector<std::uint32_t> ids;
  std::string prev;
  std::string tok;
  const auto n = static_cast<std::uint64_t>(config.n_buckets);
  auto flush = [&] {
    if (tok.empty()) return;
    if (ids.size() < config.max_tokens)
      ids.push_back(static_cast<std::uint32_t>(hash_bytes(tok, config.hash_seed) % n));
    if (!prev.empty() && prev != tok && ids.size() < config.max_tokens) {
      std::string bigram = prev;
      bigram += '\x1f';
      bigram += tok;
      ids.push_back(
          static_cast<std::uint32_t>(hash_bytes(bigram, config.hash_seed ^ kBigramSalt) % n));
    }
    prev = std::move(tok);
    tok.clear();
  };
  for (unsigned char c : text) {
    if (ids.size() >= config.max_tokens) break;
    if (is_token_byte(c)) {
      tok += lower(c);
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

EmbeddingVector encode(std::string_view text, const EncoderParams& params,
                       const EncoderConfig& config) {
  require_shape(params, config);
  auto ids = tokenize(text, config);
  Forward f = pool(ids, params);
  EmbeddingVector out{std::vector<double>(params.dim)};
  write_normalized(f, out.values);
  return out;
}

TapedBatch encode_batch_with_tape(std::span<const std::string> texts, const EncoderParams& params,
                                  const EncoderConfig& config) {
  require_shape(params, config);
  TapedBatch batch;
  batch.embeddings = Matrix(texts.size(), params.dim);
  batch.tape.dim = params.dim;
  batch.tape.n_buckets = params.n_buckets;
  batch.tape.entries.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    auto ids = tokenize(texts[i], config);
    Forward f = pool(ids, params);
    write_normalized(f, batch.embeddings.row(i));
    batch.tape.entries.push_back({std::move(ids), std::move(f.pooled), f.norm, f.sentinel});
  }
  return batch;
}

std::vector<std::uint32_t> backprop(const EncodeTape& tape, const Matrix& grad,
                                    std::span<double> table_grad) {
  if (grad.rows() != tape.entries.size() || grad.cols() != tape.dim)
    throw ContractViolation("backprop: gradient shape does not match tape");
  if (table_grad.size() != tape.n_buckets * tape.dim)
    throw ContractViolation("backprop: table gradient has wrong size");

  std::vector<std::uint32_t> touched;
  std::unordered_set<std::uint32_t> seen;
  std::vector<double> gx(tape.dim);
  for (std::size_t i = 0; i < tape.entries.size(); ++i) {
    const auto& e = tape.entries[i];
    if (e.sentinel) continue;
    auto g = grad.row(i);
    // d v / d x = (I - v v^T) / |x| with v = x / |x|.
    double vg = 0.0;
    for (std::size_t c = 0; c < tape.dim; ++c) vg += (e.pooled[c] / e.norm) * g[c];
    const double scale = 1.0 / (e.norm * static_cast<double>(e.ids.size()));
    for (std::size_t c = 0; c < tape.dim; ++c)
      gx[c] = (g[c] - (e.pooled[c] / e.norm) * vg) * scale;
    for (auto id : e.ids) {
      double* dst = table_grad.data() + static_cast<std::size_t>(id) * tape.dim;
      for (std::size_t c = 0; c < tape.dim; ++c) dst[c] += gx[c];
      if (seen.insert(id).second) touched.push_back(id);
    }
  }
  return touched;
}

std::vector<double> backprop(const EncodeTape& tape, const Matrix& grad) {
  std::vector<double> out(tape.n_buckets * tape.dim, 0.0);
  backprop(tape, grad, out);
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const EncoderConfig& config) {
  config.validate();
  require_shape(params, config);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write("JEDA", 4);
  detail::write_le<std::uint32_t>(out, kCheckpointVersion);
  detail::write_le<std::uint64_t>(out, config.hash_seed);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(config.n_buckets));
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(config.dim));
  for (float w : params.table) detail::write_le<float>(out, w);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  detail::expect_magic(in, "JEDA");
  auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ck;
  ck.config.hash_seed = detail::read_le<std::uint64_t>(in, "hash_seed");
  ck.config.n_buckets = detail::read_le<std::uint32_t>(in, "n_buckets");
  ck.config.dim = detail::read_le<std::uint32_t>(in, "dim");
  try {
    ck.config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint header invalid: ") + e.what());
  }
  ck.params = zero_params(ck.config);
  for (auto& w : ck.params.table) w = detail::read_le<float>(in, "table");
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after checkpoint table");
  return ck;
}

}  // namespace orderlens
