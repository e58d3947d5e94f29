#include "orderlens/objective.hpp"

#include <cmath>
#include <limits>

namespace orderlens {

MnrBatch MnrBatch::validated(Matrix queries, Matrix docs, std::vector<std::string> gold_ids) {
  if (queries.rows() != docs.rows() || queries.rows() != gold_ids.size())
    throw ContractViolation("MnrBatch: row counts differ");
  if (queries.cols() != docs.cols()) throw ContractViolation("MnrBatch: widths differ");
  for (const Matrix* m : {&queries, &docs}) {
    for (std::size_t r = 0; r < m->rows(); ++r) {
      if (std::abs(l2_norm(m->row(r)) - 1.0) > 1e-6)
        throw ContractViolation("MnrBatch: row " + std::to_string(r) + " is not unit-norm");
    }
  }
  return {std::move(queries), std::move(docs), std::move(gold_ids)};
}

DuplicateMask build_mask(std::span<const std::string> gold_ids) {
  DuplicateMask m(gold_ids.size());
  for (std::size_t i = 0; i < gold_ids.size(); ++i)
    for (std::size_t j = 0; j < gold_ids.size(); ++j)
      if (j != i && gold_ids[j] == gold_ids[i]) m.clear(i, j);
  return m;
}

namespace {

void check(const MnrBatch& b, const LossConfig& cfg) {
  const std::size_t n = b.query_embeddings.rows();
  if (n == 0) throw ContractViolation("mnr_loss: empty batch");
  if (b.doc_embeddings.rows() != n || b.gold_ids.size() != n)
    throw ContractViolation("mnr_loss: row counts differ");
  if (b.query_embeddings.cols() != b.doc_embeddings.cols())
    throw ContractViolation("mnr_loss: embedding widths differ");
  if (!(cfg.scale > 0.0) || !std::isfinite(cfg.scale))
    throw ContractViolation("mnr_loss: scale must be positive and finite");
}

// Softmax over unmasked columns of each row, computed with max-subtraction.
// Fills `prob` (masked entries 0) and returns per-row losses.
std::vector<double> masked_softmax_rows(const MnrBatch& b, const LossConfig& cfg,
                                        const DuplicateMask& mask, Matrix& prob) {
  const std::size_t n = b.query_embeddings.rows();
  std::vector<double> per(n);
  prob = Matrix(n, n);
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = cfg.scale * dot(b.query_embeddings.row(i), b.doc_embeddings.row(j));
      if (mask(i, j)) mx = std::max(mx, logits[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (mask(i, j)) z += std::exp(logits[j] - mx);
    const double lse = mx + std::log(z);
    per[i] = lse - logits[i];
    for (std::size_t j = 0; j < n; ++j)
      prob(i, j) = mask(i, j) ? std::exp(logits[j] - lse) : 0.0;
  }
  return per;
}

}  // namespace

MnrEvaluation mnr_loss_and_grad(const MnrBatch& b, const LossConfig& cfg) {
  check(b, cfg);
  const std::size_t n = b.query_embeddings.rows();
  const std::size_t d = b.query_embeddings.cols();
  const DuplicateMask mask = build_mask(b.gold_ids);

  Matrix prob;
  MnrEvaluation out;
  out.value.per_example = masked_softmax_rows(b, cfg, mask, prob);
  double sum = 0.0;
  for (double l : out.value.per_example) sum += l;
  out.value.loss = sum / static_cast<double>(n);

  // d(mean)/d(logit_ij) = (p_ij - [i==j]) / n on unmasked columns; masked are 0.
  // logit_ij = s <q_i, d_j>.
  out.grad.query = Matrix(n, d);
  out.grad.doc = Matrix(n, d);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(i, j)) continue;
      const double g = cfg.scale * inv_n * (prob(i, j) - (i == j ? 1.0 : 0.0));
      if (g == 0.0) continue;
      auto qi = b.query_embeddings.row(i);
      auto dj = b.doc_embeddings.row(j);
      auto gq = out.grad.query.row(i);
      auto gd = out.grad.doc.row(j);
      for (std::size_t c = 0; c < d; ++c) {
        gq[c] += g * dj[c];
        gd[c] += g * qi[c];
      }
    }
  }
  return out;
}

MnrLoss mnr_loss(const MnrBatch& b, const LossConfig& cfg) {
  check(b, cfg);
  Matrix prob;
  MnrLoss out;
  out.per_example = masked_softmax_rows(b, cfg, build_mask(b.gold_ids), prob);
  double sum = 0.0;
  for (double l : out.per_example) sum += l;
  out.loss = sum / static_cast<double>(out.per_example.size());
  return out;
}

MnrGradient mnr_loss_grad(const MnrBatch& b, const LossConfig& cfg) {
  return mnr_loss_and_grad(b, cfg).grad;
}

}  // namespace orderlens
