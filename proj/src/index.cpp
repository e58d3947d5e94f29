#include "orderlens/index.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "binary_io.hpp"

namespace orderlens {

VectorIndex::VectorIndex(std::vector<std::string> ids, std::vector<float> matrix, std::size_t dim)
    : ids_(std::move(ids)), matrix_(std::move(matrix)), dim_(dim) {
  if (matrix_.size() != ids_.size() * dim_)
    throw ContractViolation("VectorIndex: matrix size does not match ids x dim");
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!positions_.emplace(ids_[i], i).second)
      throw ContractViolation("VectorIndex: duplicate order_id " + ids_[i]);
    double sq = 0.0;
    for (float x : row(i)) sq += static_cast<double>(x) * x;
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6)
      throw ContractViolation("VectorIndex: row for " + ids_[i] + " is not unit-norm");
  }
}

std::optional<std::size_t> VectorIndex::find(const std::string& order_id) const {
  auto it = positions_.find(order_id);
  if (it == positions_.end()) return std::nullopt;
  return it->second;
}

Matrix VectorIndex::as_matrix() const {
  Matrix m(size(), dim_);
  for (std::size_t i = 0; i < matrix_.size(); ++i) m.data()[i] = matrix_[i];
  return m;
}

VectorIndex build_index(const std::vector<OrderConcept>& orders, const EncoderParams& params,
                        const EncoderConfig& config) {
  if (orders.empty()) throw ContractViolation("build_index: no orders");
  std::vector<std::string> ids;
  std::vector<float> matrix;
  ids.reserve(orders.size());
  matrix.reserve(orders.size() * config.dim);
  for (const auto& o : orders) {
    ids.push_back(o.order_id);
    EmbeddingVector e = encode(o.canonical_text, params, config);
    // Re-normalize after narrowing so stored rows are unit within float precision.
    double sq = 0.0;
    std::vector<float> narrow(e.values.begin(), e.values.end());
    for (float x : narrow) sq += static_cast<double>(x) * x;
    const double inv = 1.0 / std::sqrt(sq);
    for (float x : narrow) matrix.push_back(static_cast<float>(x * inv));
  }
  return VectorIndex(std::move(ids), std::move(matrix), config.dim);
}

RetrievalResult search(const EmbeddingVector& query, const VectorIndex& index, std::size_t k,
                       const CandidateFilter* candidates) {
  if (k == 0) throw ContractViolation("search: k must be at least 1");
  if (query.dim() != index.dim()) throw ContractViolation("search: query dimension mismatch");

  std::vector<ScoredOrder> scored;
  if (candidates) {
    scored.reserve(candidates->size());
    for (std::size_t i = 0; i < index.size(); ++i)
      if (candidates->contains(index.id(i)))
        scored.push_back({index.id(i), dot(index.row(i), query.values)});
  } else {
    scored.reserve(index.size());
    for (std::size_t i = 0; i < index.size(); ++i)
      scored.push_back({index.id(i), dot(index.row(i), query.values)});
  }

  auto better = [](const ScoredOrder& a, const ScoredOrder& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.order_id < b.order_id;
  };
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                    scored.end(), better);
  scored.resize(keep);
  return {std::move(scored)};
}

void save_index(const std::filesystem::path& path, const VectorIndex& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write index " + path.string());
  out.write("JEDX", 4);
  detail::write_le<std::uint32_t>(out, kIndexVersion);
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(index.dim()));
  detail::write_le<std::uint64_t>(out, index.size());
  for (const auto& id : index.ids()) {
    if (id.size() > 0xffff) throw FormatError("order id too long for index format: " + id);
    detail::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (float x : index.matrix()) detail::write_le<float>(out, x);
  if (!out) throw IoError("failed writing index " + path.string());
}

VectorIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index " + path.string());
  detail::expect_magic(in, "JEDX");
  auto version = detail::read_le<std::uint32_t>(in, "version");
  if (version != kIndexVersion)
    throw FormatError("unsupported index version " + std::to_string(version));
  auto dim = detail::read_le<std::uint32_t>(in, "dim");
  auto count = detail::read_le<std::uint64_t>(in, "count");
  if (dim == 0) throw FormatError("index dim is zero");
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
  for (std::uint64_t i = 0; i < count; ++i) {
    auto len = detail::read_le<std::uint16_t>(in, "id length");
    std::string id(len, '\0');
    if (!in.read(id.data(), len)) throw FormatError("truncated index id");
    ids.push_back(std::move(id));
  }
  std::vector<float> matrix(static_cast<std::size_t>(count) * dim);
  for (auto& x : matrix) x = detail::read_le<float>(in, "matrix");
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes after index matrix");
  try {
    return VectorIndex(std::move(ids), std::move(matrix), dim);
  } catch (const ContractViolation& e) {
    throw FormatError(std::string("index contents invalid: ") + e.what());
  }
}

}  // namespace orderlens
