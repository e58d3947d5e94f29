#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "orderlens/common.hpp"

namespace orderlens {

// In-batch pairs (q_i, d_i+). Rows are expected to be unit-norm when they come
// from the encoder; the loss itself is defined on whatever rows are given.
struct MnrBatch {
  Matrix query_embeddings;
  Matrix doc_embeddings;
  std::vector<std::string> gold_ids;

  // Checks equal row counts, matching widths, and unit-norm rows within 1e-6.
  static MnrBatch validated(Matrix queries, Matrix docs, std::vector<std::string> gold_ids);
};

// m[i][j] = 0 exactly when j != i and gold_ids[j] == gold_ids[i].
class DuplicateMask {
 public:
  DuplicateMask() = default;
  explicit DuplicateMask(std::size_t n) : n_(n), bits_(n * n, 1) {}

  std::size_t size() const noexcept { return n_; }
  bool operator()(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
  void clear(std::size_t i, std::size_t j) { bits_[i * n_ + j] = 0; }

  bool operator==(const DuplicateMask&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct LossConfig {
  double scale = 20.0;  // s = 1 / temperature

  static LossConfig from_temperature(double tau) { return {1.0 / tau}; }
  double temperature() const { return 1.0 / scale; }
};

DuplicateMask build_mask(std::span<const std::string> gold_ids);

struct MnrLoss {
  double loss = 0.0;  // mean of per_example
  std::vector<double> per_example;
};

struct MnrGradient {
  Matrix query;  // d(mean loss) / d(query_embeddings)
  Matrix doc;    // d(mean loss) / d(doc_embeddings)
};

// Duplicate-safe multiple negatives ranking loss:
//   l_i = -log( exp(s<q_i,d_i>) / sum_j m_ij exp(s<q_i,d_j>) ),  loss = mean_i l_i.
// Throws ContractViolation on an empty or mis-shaped batch, or scale <= 0.
MnrLoss mnr_loss(const MnrBatch& batch, const LossConfig& config);
MnrGradient mnr_loss_grad(const MnrBatch& batch, const LossConfig& config);

struct MnrEvaluation {
  MnrLoss value;
  MnrGradient grad;
};

// Loss and gradient from one pass over the similarity matrix.
MnrEvaluation mnr_loss_and_grad(const MnrBatch& batch, const LossConfig& config);

}  // namespace orderlens
