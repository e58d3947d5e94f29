#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "orderlens/common.hpp"
#include "orderlens/corpus.hpp"
#include "orderlens/encoder.hpp"
#include "orderlens/index.hpp"

namespace orderlens {

// Embedding-structure diagnostics over query embeddings grouped by gold order.
//
// Cosine similarity throughout is <a,b> / (|a||b|). Centroids used by
// compactness and separation are normalized means of a group's query
// embeddings; a zero mean normalizes to the e1 sentinel. Fisher ratio uses
// raw arithmetic means.
struct GeometryReport {
  double margin_mean = 0.0;
  double margin_pos_frac = 0.0;
  double compactness_mean = 0.0;
  double separation_mean = 0.0;
  double fisher_ratio = 0.0;  // +infinity when within-class scatter is zero
  double silhouette_cosine = 0.0;
  std::size_t n_queries = 0;
  std::size_t n_orders = 0;
};

struct MarginStats {
  double mean = 0.0;
  double pos_frac = 0.0;
};

// margin(q) = cos(q, e_gold) - max over other orders of cos(q, e_other).
// Throws ContractViolation with fewer than two orders or an unknown gold id.
MarginStats margins(const Matrix& queries, std::span<const std::string> gold_ids,
                    const Matrix& orders, std::span<const std::string> order_ids);
MarginStats margins(const Matrix& queries, std::span<const std::string> gold_ids,
                    const VectorIndex& index);

// Unweighted mean over orders with >= 2 queries of mean(1 - cos(q, centroid)).
double compactness(const Matrix& queries, std::span<const std::string> gold_ids);

// Mean over unordered centroid pairs of 1 - cos(mu_a, mu_b); 0 with < 2 groups.
double separation(const Matrix& queries, std::span<const std::string> gold_ids);

// Between-group over within-group scatter, both divided by N.
double fisher_ratio(const Matrix& queries, std::span<const std::string> gold_ids);

// Mean silhouette with distance 1 - cos; singletons and single-cluster inputs score 0.
double silhouette_cosine(const Matrix& queries, std::span<const std::string> gold_ids);

GeometryReport compute_geometry(const Matrix& queries, std::span<const std::string> gold_ids,
                                const VectorIndex& index);

std::string geometry_report_json(const GeometryReport& report);

// Encodes queries; rows follow the order of `queries`.
Matrix encode_queries(std::span<const QueryInstance> queries, const EncoderParams& params,
                      const EncoderConfig& encoder);

// TSV rows: id, kind (query|order), variant or "-", gold_order_id or "-",
// then one column per dimension. Preceded by a header row.
void export_embeddings(std::ostream& out, std::span<const QueryInstance> queries,
                       const std::vector<OrderConcept>& orders, const EncoderParams& params,
                       const EncoderConfig& encoder);

}  // namespace orderlens
