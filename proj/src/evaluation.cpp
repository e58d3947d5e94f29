#include "orderlens/evaluation.hpp"

#include <json.hpp>

namespace orderlens {

using ojson = nlohmann::ordered_json;

std::optional<EvalMode> parse_eval_mode(std::string_view s) {
  if (s == "unified_corpus") return EvalMode::unified_corpus;
  if (s == "encounter_scoped") return EvalMode::encounter_scoped;
  return std::nullopt;
}

std::optional<EvalView> parse_eval_view(std::string_view s) {
  if (s == "strict") return EvalView::strict;
  if (s == "filtered") return EvalView::filtered;
  return std::nullopt;
}

std::string_view to_string(EvalMode m) {
  return m == EvalMode::unified_corpus ? "unified_corpus" : "encounter_scoped";
}

std::string_view to_string(EvalView v) { return v == EvalView::strict ? "strict" : "filtered"; }

void EvalConfig::validate() const {
  if (ks.empty()) throw ConfigError("eval ks must be non-empty");
  for (std::size_t i = 0; i < ks.size(); ++i) {
    if (ks[i] < 1) throw ConfigError("eval ks must be >= 1");
    if (i > 0 && ks[i] <= ks[i - 1]) throw ConfigError("eval ks must be strictly ascending");
  }
}

std::optional<std::size_t> rank_of_gold(const EmbeddingVector& query, const std::string& gold,
                                        const VectorIndex& index,
                                        const CandidateFilter* candidates) {
  if (candidates && !candidates->contains(gold)) return std::nullopt;
  auto pos = index.find(gold);
  if (!pos) return std::nullopt;
  const double gold_score = dot(index.row(*pos), query.values);
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (i == *pos) continue;
    if (candidates && !candidates->contains(index.id(i))) continue;
    const double s = dot(index.row(i), query.values);
    if (s > gold_score || (s == gold_score && index.id(i) < gold)) ++ahead;
  }
  return ahead + 1;
}

namespace {

MetricBlock aggregate(std::span<const RankedQuery> ranks, const EvalConfig& config,
                      std::optional<Variant> only) {
  MetricBlock b;
  std::vector<double> hits(config.ks.size(), 0.0);
  std::vector<double> rr(config.ks.size(), 0.0);
  for (const auto& q : ranks) {
    if (only && q.variant != *only) continue;
    ++b.n_total;
    if (!q.rank) continue;
    ++b.n_with_reference;
    for (std::size_t k = 0; k < config.ks.size(); ++k) {
      if (*q.rank <= config.ks[k]) {
        hits[k] += 1.0;
        rr[k] += 1.0 / static_cast<double>(*q.rank);
      }
    }
  }
  const std::size_t denom = config.view == EvalView::strict ? b.n_total : b.n_with_reference;
  if (denom == 0) {
    b.empty_denominator = true;
    return b;
  }
  for (std::size_t k = 0; k < config.ks.size(); ++k) {
    b.recall.push_back(hits[k] / static_cast<double>(denom));
    b.mrr.push_back(rr[k] / static_cast<double>(denom));
  }
  return b;
}

}  // namespace

EvalReport summarize_ranks(std::span<const RankedQuery> ranks, const EvalConfig& config) {
  config.validate();
  EvalReport r;
  r.config = config;
  r.overall = aggregate(ranks, config, std::nullopt);
  for (Variant v : kAllVariants) r.by_variant[static_cast<std::size_t>(v)] = aggregate(ranks, config, v);
  return r;
}

EvalReport evaluate(std::span<const QueryInstance> queries, const VectorIndex& index,
                    const EncoderParams& params, const EncoderConfig& encoder,
                    const EvalConfig& config, const CandidatePools* pools) {
  config.validate();
  if (queries.empty()) throw ContractViolation("evaluate: no queries");
  if (config.mode == EvalMode::encounter_scoped && !pools)
    throw ContractViolation("evaluate: encounter_scoped mode requires candidate pools");

  std::vector<RankedQuery> ranks;
  ranks.reserve(queries.size());
  for (const auto& q : queries) {
    const CandidateFilter* filter = nullptr;
    if (config.mode == EvalMode::encounter_scoped) {
      auto it = pools->find(q.encounter_id);
      if (it == pools->end())
        throw ContractViolation("evaluate: no candidate pool for encounter " + q.encounter_id);
      filter = &it->second;
    }
    ranks.push_back({q.variant, rank_of_gold(encode(q.text, params, encoder), q.gold_order_id,
                                             index, filter)});
  }
  return summarize_ranks(ranks, config);
}

std::array<std::optional<double>, 4> mean_one_minus_cosine_by_variant(
    std::span<const QueryInstance> queries, const VectorIndex& index, const EncoderParams& params,
    const EncoderConfig& encoder) {
  std::array<double, 4> sum{};
  std::array<std::size_t, 4> count{};
  for (const auto& q : queries) {
    auto pos = index.find(q.gold_order_id);
    if (!pos) throw ContractViolation("gold order " + q.gold_order_id + " not in index");
    const auto v = static_cast<std::size_t>(q.variant);
    sum[v] += 1.0 - dot(index.row(*pos), encode(q.text, params, encoder).values);
    ++count[v];
  }
  std::array<std::optional<double>, 4> out;
  for (std::size_t v = 0; v < 4; ++v)
    if (count[v] > 0) out[v] = sum[v] / static_cast<double>(count[v]);
  return out;
}

namespace {

ojson block_json(const MetricBlock& b, const EvalConfig& config, bool with_counts) {
  ojson j;
  if (with_counts) {
    j["n_total"] = b.n_total;
    j["n_with_reference"] = b.n_with_reference;
  }
  ojson recall = ojson::object();
  ojson mrr = ojson::object();
  for (std::size_t k = 0; k < config.ks.size(); ++k) {
    const std::string key = std::to_string(config.ks[k]);
    if (b.empty_denominator) {
      recall[key] = nullptr;
      mrr[key] = nullptr;
    } else {
      recall[key] = round_sig9(b.recall[k]);
      mrr[key] = round_sig9(b.mrr[k]);
    }
  }
  j["recall"] = std::move(recall);
  j["mrr"] = std::move(mrr);
  return j;
}

}  // namespace

std::string eval_report_json(const EvalReport& r) {
  ojson j;
  ojson cfg;
  cfg["ks"] = r.config.ks;
  cfg["mode"] = to_string(r.config.mode);
  cfg["view"] = to_string(r.config.view);
  j["config"] = std::move(cfg);
  j["status"] = r.overall.empty_denominator ? "empty_denominator" : "ok";
  j["n_total"] = r.overall.n_total;
  j["n_with_reference"] = r.overall.n_with_reference;
  j["overall"] = block_json(r.overall, r.config, false);
  ojson by_variant;
  for (Variant v : kAllVariants)
    by_variant[std::string(to_string(v))] = block_json(r.variant(v), r.config, true);
  j["by_variant"] = std::move(by_variant);
  return j.dump(2) + "\n";
}

}  // namespace orderlens
