#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "orderlens/corpus.hpp"
#include "orderlens/encoder.hpp"

namespace orderlens {

// Immutable store of one unit-norm embedding per order.
class VectorIndex {
 public:
  VectorIndex() = default;

  // Throws ContractViolation on duplicate ids, shape mismatch, or non-unit rows.
  VectorIndex(std::vector<std::string> ids, std::vector<float> matrix, std::size_t dim);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const float> row(std::size_t i) const { return {matrix_.data() + i * dim_, dim_}; }
  const std::vector<float>& matrix() const noexcept { return matrix_; }
  std::optional<std::size_t> find(const std::string& order_id) const;

  // Rows widened to double, in index order.
  Matrix as_matrix() const;

  bool operator==(const VectorIndex& o) const {
    return dim_ == o.dim_ && ids_ == o.ids_ && matrix_ == o.matrix_;
  }

 private:
  std::vector<std::string> ids_;
  std::vector<float> matrix_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> positions_;
};

struct ScoredOrder {
  std::string order_id;
  double score = 0.0;

  bool operator==(const ScoredOrder&) const = default;
};

// Descending score, ties by ascending order_id.
struct RetrievalResult {
  std::vector<ScoredOrder> ranked;

  bool operator==(const RetrievalResult&) const = default;
};

using CandidateFilter = std::unordered_set<std::string>;

// Throws ContractViolation on an empty list or duplicate order_id.
VectorIndex build_index(const std::vector<OrderConcept>& orders, const EncoderParams& params,
                        const EncoderConfig& config);

// Exact top-k by dot product (cosine for unit rows). When `candidates` is
// given only those ids are scored; an empty candidate set yields an empty result.
RetrievalResult search(const EmbeddingVector& query, const VectorIndex& index, std::size_t k,
                       const CandidateFilter* candidates = nullptr);

// "JEDX", u32 version, u32 dim, u64 count, then per entry u16 id length and id
// bytes, then count * dim little-endian f32 row-major.
inline constexpr std::uint32_t kIndexVersion = 1;
void save_index(const std::filesystem::path& path, const VectorIndex& index);
VectorIndex load_index(const std::filesystem::path& path);

}  // namespace orderlens
