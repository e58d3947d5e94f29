#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orderlens/corpus.hpp"
#include "orderlens/encoder.hpp"
#include "orderlens/index.hpp"

namespace orderlens {

enum class EvalMode { unified_corpus, encounter_scoped };
enum class EvalView { strict, filtered };

std::optional<EvalMode> parse_eval_mode(std::string_view s);
std::optional<EvalView> parse_eval_view(std::string_view s);
std::string_view to_string(EvalMode m);
std::string_view to_string(EvalView v);

struct EvalConfig {
  std::vector<std::size_t> ks{1, 5, 10, 20};
  EvalMode mode = EvalMode::unified_corpus;
  EvalView view = EvalView::strict;

  // ks must be non-empty, strictly ascending, all >= 1.
  void validate() const;
};

// Recall@K and MRR@K for one slice of queries, indexed like EvalConfig::ks.
struct MetricBlock {
  std::size_t n_total = 0;
  std::size_t n_with_reference = 0;
  // Set when the view's denominator is zero; recall and mrr are then empty.
  bool empty_denominator = false;
  std::vector<double> recall;
  std::vector<double> mrr;
};

struct EvalReport {
  EvalConfig config;
  MetricBlock overall;
  std::array<MetricBlock, 4> by_variant;  // kAllVariants order

  const MetricBlock& variant(Variant v) const { return by_variant[static_cast<std::size_t>(v)]; }
};

// 1-based position of `gold` in the full (score desc, id asc) ranking of the
// candidate set; nullopt when gold is not a candidate.
std::optional<std::size_t> rank_of_gold(const EmbeddingVector& query, const std::string& gold,
                                        const VectorIndex& index,
                                        const CandidateFilter* candidates = nullptr);

struct RankedQuery {
  Variant variant = Variant::CommandContext;
  std::optional<std::size_t> rank;
};

// Aggregates precomputed gold ranks under the config's view.
EvalReport summarize_ranks(std::span<const RankedQuery> ranks, const EvalConfig& config);

// encounter_scoped mode restricts each query to its encounter's pool and
// requires `pools`. Throws ContractViolation on empty query lists or missing pools.
EvalReport evaluate(std::span<const QueryInstance> queries, const VectorIndex& index,
                    const EncoderParams& params, const EncoderConfig& encoder,
                    const EvalConfig& config, const CandidatePools* pools = nullptr);

// Per variant: mean over queries of 1 - cos(f(q), e_gold). nullopt for
// variants with no queries.
std::array<std::optional<double>, 4> mean_one_minus_cosine_by_variant(
    std::span<const QueryInstance> queries, const VectorIndex& index, const EncoderParams& params,
    const EncoderConfig& encoder);

// Fixed key order, 9 significant digits.
std::string eval_report_json(const EvalReport& report);

}  // namespace orderlens
