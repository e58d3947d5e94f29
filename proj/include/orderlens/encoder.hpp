#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orderlens/common.hpp"

namespace orderlens {

struct EncoderConfig {
  std::size_t dim = 128;
  std::size_t n_buckets = 32768;
  std::size_t max_tokens = 512;
  std::uint64_t hash_seed = 0;

  // Throws ConfigError unless dim >= 2, n_buckets >= 256, max_tokens >= 1.
  void validate() const;
};

// Trainable hashed-token embedding table, n_buckets x dim, row-major.
struct EncoderParams {
  std::size_t n_buckets = 0;
  std::size_t dim = 0;
  std::vector<float> table;

  std::span<float> row(std::size_t bucket) { return {table.data() + bucket * dim, dim}; }
  std::span<const float> row(std::size_t bucket) const {
    return {table.data() + bucket * dim, dim};
  }

  bool matches(const EncoderConfig& config) const {
    return n_buckets == config.n_buckets && dim == config.dim &&
           table.size() == n_buckets * dim;
  }

  bool operator==(const EncoderParams&) const = default;
};

EncoderParams zero_params(const EncoderConfig& config);

// i.i.d. uniform in [-0.5/sqrt(dim), +0.5/sqrt(dim)].
EncoderParams random_params(const EncoderConfig& config, std::uint64_t seed);

struct EmbeddingVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

// Unit vector along dimension 0; returned for empty or zero-vector inputs.
EmbeddingVector sentinel_embedding(std::size_t dim);

// Lowercases, splits on runs of non-alphanumeric bytes, and hashes each token
// followed by its bigram with the previous token. Bigrams of a token with an
// identical predecessor are skipped, so repeating a single word does not change
// the bag of features. The result is truncated to max_tokens ids.
std::vector<std::uint32_t> tokenize(std::string_view text, const EncoderConfig& config);

// f(text): mean of the table rows for the token ids, l2-normalized.
EmbeddingVector encode(std::string_view text, const EncoderParams& params,
                       const EncoderConfig& config);

// Forward-pass state retained for backprop.
struct EncodeTape {
  struct Entry {
    std::vector<std::uint32_t> ids;
    std::vector<double> pooled;  // pre-normalization mean
    double norm = 0.0;
    bool sentinel = false;
  };
  std::size_t dim = 0;
  std::size_t n_buckets = 0;
  std::vector<Entry> entries;
};

struct TapedBatch {
  Matrix embeddings;  // one unit row per input text
  EncodeTape tape;
};

TapedBatch encode_batch_with_tape(std::span<const std::string> texts, const EncoderParams& params,
                                  const EncoderConfig& config);

// Accumulates d(loss)/d(table) into `table_grad` (size n_buckets * dim) given
// d(loss)/d(embeddings). Rows for buckets not in the batch are left untouched.
// Returns the distinct buckets that received gradient, in first-touch order.
std::vector<std::uint32_t> backprop(const EncodeTape& tape, const Matrix& grad_embeddings,
                                    std::span<double> table_grad);

// Convenience form returning a dense, freshly zeroed gradient.
std::vector<double> backprop(const EncodeTape& tape, const Matrix& grad_embeddings);

// Checkpoint: "JEDA", u32 version, u64 hash_seed, u32 n_buckets, u32 dim,
// then n_buckets * dim little-endian f32, row-major.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  EncoderConfig config;
  EncoderParams params;
};

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& params,
                     const EncoderConfig& config);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace orderlens
