#include "orderlens/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <limits>
#include <map>
#include <ostream>
#include <unordered_map>

namespace orderlens {

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

void check_rows(const Matrix& queries, std::span<const std::string> gold_ids) {
  if (queries.rows() != gold_ids.size())
    throw ContractViolation("geometry: one gold id per query row required");
}

// Query row indices grouped by gold id, in ascending id order.
std::map<std::string, std::vector<std::size_t>> group(std::span<const std::string> gold_ids) {
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < gold_ids.size(); ++i) groups[gold_ids[i]].push_back(i);
  return groups;
}

std::vector<double> mean_of(const Matrix& m, const std::vector<std::size_t>& rows) {
  std::vector<double> mu(m.cols(), 0.0);
  for (auto r : rows)
    for (std::size_t c = 0; c < m.cols(); ++c) mu[c] += m(r, c);
  for (auto& x : mu) x /= static_cast<double>(rows.size());
  return mu;
}

std::vector<double> normalized_centroid(const Matrix& m, const std::vector<std::size_t>& rows) {
  auto mu = mean_of(m, rows);
  const double n = l2_norm(mu);
  if (!(n > 0.0)) {
    std::fill(mu.begin(), mu.end(), 0.0);
    mu[0] = 1.0;
    return mu;
  }
  for (auto& x : mu) x /= n;
  return mu;
}

}  // namespace

MarginStats margins(const Matrix& queries, std::span<const std::string> gold_ids,
                    const Matrix& orders, std::span<const std::string> order_ids) {
  check_rows(queries, gold_ids);
  if (orders.rows() != order_ids.size())
    throw ContractViolation("margins: one id per order row required");
  if (orders.rows() < 2) throw ContractViolation("margins: need at least two orders");
  if (queries.rows() == 0) return {};
  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < order_ids.size(); ++i) pos.emplace(order_ids[i], i);

  double sum = 0.0;
  std::size_t positive = 0;
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    auto it = pos.find(gold_ids[q]);
    if (it == pos.end()) throw ContractViolation("margins: gold " + gold_ids[q] + " not indexed");
    const double gold = cosine(queries.row(q), orders.row(it->second));
    double best_other = -std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < orders.rows(); ++o) {
      if (o == it->second) continue;
      best_other = std::max(best_other, cosine(queries.row(q), orders.row(o)));
    }
    const double m = gold - best_other;
    sum += m;
    if (m > 0.0) ++positive;
  }
  const auto n = static_cast<double>(queries.rows());
  return {sum / n, static_cast<double>(positive) / n};
}

MarginStats margins(const Matrix& queries, std::span<const std::string> gold_ids,
                    const VectorIndex& index) {
  return margins(queries, gold_ids, index.as_matrix(), index.ids());
}

double compactness(const Matrix& queries, std::span<const std::string> gold_ids) {
  check_rows(queries, gold_ids);
  double total = 0.0;
  std::size_t qualifying = 0;
  for (const auto& [id, rows] : group(gold_ids)) {
    if (rows.size() < 2) continue;
    auto mu = normalized_centroid(queries, rows);
    double s = 0.0;
    for (auto r : rows) s += 1.0 - cosine(queries.row(r), mu);
    total += s / static_cast<double>(rows.size());
    ++qualifying;
  }
  return qualifying == 0 ? 0.0 : total / static_cast<double>(qualifying);
}

double separation(const Matrix& queries, std::span<const std::string> gold_ids) {
  check_rows(queries, gold_ids);
  std::vector<std::vector<double>> centroids;
  for (const auto& [id, rows] : group(gold_ids)) centroids.push_back(normalized_centroid(queries, rows));
  if (centroids.size() < 2) return 0.0;
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < centroids.size(); ++a)
    for (std::size_t b = a + 1; b < centroids.size(); ++b) {
      sum += 1.0 - cosine(centroids[a], centroids[b]);
      ++pairs;
    }
  return sum / static_cast<double>(pairs);
}

double fisher_ratio(const Matrix& queries, std::span<const std::string> gold_ids) {
  check_rows(queries, gold_ids);
  if (queries.rows() == 0) return 0.0;
  std::vector<std::size_t> all(queries.rows());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto global = mean_of(queries, all);
  const auto n = static_cast<double>(queries.rows());
  double between = 0.0;
  double within = 0.0;
  for (const auto& [id, rows] : group(gold_ids)) {
    auto mu = mean_of(queries, rows);
    double d2 = 0.0;
    for (std::size_t c = 0; c < mu.size(); ++c) d2 += (mu[c] - global[c]) * (mu[c] - global[c]);
    between += static_cast<double>(rows.size()) * d2;
    for (auto r : rows)
      for (std::size_t c = 0; c < mu.size(); ++c) {
        const double e = queries(r, c) - mu[c];
        within += e * e;
      }
  }
  between /= n;
  within /= n;
  if (within == 0.0) return between > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return between / within;
}

double silhouette_cosine(const Matrix& queries, std::span<const std::string> gold_ids) {
  check_rows(queries, gold_ids);
  const std::size_t n = queries.rows();
  if (n == 0) return 0.0;
  const auto groups = group(gold_ids);
  if (groups.size() < 2) return 0.0;

  std::vector<std::size_t> label(n);
  std::vector<std::size_t> sizes;
  for (const auto& [id, rows] : groups) {
    for (auto r : rows) label[r] = sizes.size();
    sizes.push_back(rows.size());
  }

  std::vector<double> dist_sum(sizes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (sizes[label[i]] < 2) continue;  // singleton contributes 0
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[label[j]] += 1.0 - cosine(queries.row(i), queries.row(j));
    }
    const double a = dist_sum[label[i]] / static_cast<double>(sizes[label[i]] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < sizes.size(); ++c)
      if (c != label[i]) b = std::min(b, dist_sum[c] / static_cast<double>(sizes[c]));
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

GeometryReport compute_geometry(const Matrix& queries, std::span<const std::string> gold_ids,
                                const VectorIndex& index) {
  GeometryReport r;
  const auto m = margins(queries, gold_ids, index);
  r.margin_mean = m.mean;
  r.margin_pos_frac = m.pos_frac;
  r.compactness_mean = compactness(queries, gold_ids);
  r.separation_mean = separation(queries, gold_ids);
  r.fisher_ratio = fisher_ratio(queries, gold_ids);
  r.silhouette_cosine = silhouette_cosine(queries, gold_ids);
  r.n_queries = queries.rows();
  r.n_orders = group(gold_ids).size();
  return r;
}

std::string geometry_report_json(const GeometryReport& r) {
  nlohmann::ordered_json j;
  j["margin_mean"] = round_sig9(r.margin_mean);
  j["margin_pos_frac"] = round_sig9(r.margin_pos_frac);
  j["compactness_mean"] = round_sig9(r.compactness_mean);
  j["separation_mean"] = round_sig9(r.separation_mean);
  // JSON has no infinity literal.
  if (std::isinf(r.fisher_ratio))
    j["fisher_ratio"] = "Infinity";
  else
    j["fisher_ratio"] = round_sig9(r.fisher_ratio);
  j["silhouette_cosine"] = round_sig9(r.silhouette_cosine);
  j["n_queries"] = r.n_queries;
  j["n_orders"] = r.n_orders;
  return j.dump(2) + "\n";
}

Matrix encode_queries(std::span<const QueryInstance> queries, const EncoderParams& params,
                      const EncoderConfig& encoder) {
  Matrix m(queries.size(), encoder.dim);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    auto e = encode(queries[i].text, params, encoder);
    std::copy(e.values.begin(), e.values.end(), m.row(i).begin());
  }
  return m;
}

void export_embeddings(std::ostream& out, std::span<const QueryInstance> queries,
                       const std::vector<OrderConcept>& orders, const EncoderParams& params,
                       const EncoderConfig& encoder) {
  char buf[32];
  auto write_row = [&](const std::string& id, const char* kind, std::string_view variant,
                       const std::string& gold, const EmbeddingVector& e) {
    out << id << '\t' << kind << '\t' << variant << '\t' << gold;
    for (double x : e.values) {
      std::snprintf(buf, sizeof buf, "%.9g", x);
      out << '\t' << buf;
    }
    out << '\n';
  };
  out << "id\tkind\tvariant\tgold_order_id";
  for (std::size_t c = 0; c < encoder.dim; ++c) out << "\td" << c;
  out << '\n';
  for (const auto& q : queries)
    write_row(q.query_id, "query", to_string(q.variant), q.gold_order_id,
              encode(q.text, params, encoder));
  for (const auto& o : orders)
    write_row(o.order_id, "order", "-", "-", encode(o.canonical_text, params, encoder));
}

}  // namespace orderlens
