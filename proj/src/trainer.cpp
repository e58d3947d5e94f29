#include "orderlens/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <unordered_map>
#include <unordered_set>

namespace orderlens {

std::optional<Optimizer> parse_optimizer(std::string_view s) {
  if (s == "sgd_momentum") return Optimizer::sgd_momentum;
  if (s == "adam_like") return Optimizer::adam_like;
  return std::nullopt;
}

std::string_view to_string(Optimizer o) {
  return o == Optimizer::sgd_momentum ? "sgd_momentum" : "adam_like";
}

TrainConfig TrainConfig::paper_preset() {
  TrainConfig c;
  c.learning_rate = 2e-5;
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0))
    throw ConfigError("warmup_ratio must lie in [0, 1)");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and non-negative");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ConfigError("scale must be positive");
  if (variant_filter && variant_filter->empty())
    throw ConfigError("variant filter must name at least one variant");
}

LinearWarmupSchedule::LinearWarmupSchedule(double peak, std::size_t total_steps,
                                           double warmup_ratio)
    : peak_(peak),
      total_(total_steps),
      warmup_(static_cast<std::size_t>(std::ceil(warmup_ratio * static_cast<double>(total_steps)))) {}

double LinearWarmupSchedule::at(std::size_t step) const {
  if (step >= total_) return 0.0;
  if (step < warmup_) return peak_ * static_cast<double>(step) / static_cast<double>(warmup_);
  return peak_ * static_cast<double>(total_ - step) / static_cast<double>(total_ - warmup_);
}

BatchSampler::BatchSampler(std::vector<std::string> gold_ids, std::size_t batch_size,
                           std::uint64_t seed)
    : gold_ids_(std::move(gold_ids)), batch_size_(batch_size), rng_(seed) {
  if (batch_size_ < 1) throw ContractViolation("BatchSampler: batch size must be positive");
  if (gold_ids_.size() < batch_size_)
    throw ContractViolation("BatchSampler: fewer queries than the batch size");
}

std::size_t BatchSampler::batches_per_epoch() const noexcept {
  return (gold_ids_.size() + batch_size_ - 1) / batch_size_;
}

std::vector<std::vector<std::size_t>> BatchSampler::next_epoch() {
  std::vector<std::size_t> order(gold_ids_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng_.shuffle(order);

  const std::size_t n_batches = batches_per_epoch();
  std::vector<std::vector<std::size_t>> batches(n_batches);
  std::vector<std::unordered_set<std::string_view>> held(n_batches);
  std::vector<std::size_t> overflow;
  // Batches before `first_open` are full.
  std::size_t first_open = 0;
  for (std::size_t q : order) {
    const std::string_view gold = gold_ids_[q];
    bool placed = false;
    for (std::size_t b = first_open; b < n_batches; ++b) {
      if (batches[b].size() < batch_size_ && !held[b].contains(gold)) {
        batches[b].push_back(q);
        held[b].insert(gold);
        placed = true;
        break;
      }
    }
    if (!placed) overflow.push_back(q);
    while (first_open < n_batches && batches[first_open].size() == batch_size_) ++first_open;
  }
  std::size_t b = 0;
  for (std::size_t q : overflow) {
    while (batches[b].size() == batch_size_) ++b;
    batches[b].push_back(q);
  }
  return batches;
}

namespace {

class OptimizerState {
 public:
  OptimizerState(const TrainConfig& c, std::size_t n) : cfg_(c), m_(n, 0.0) {
    if (c.optimizer == Optimizer::adam_like) v_.assign(n, 0.0);
  }

  void step(std::vector<float>& table, const std::vector<double>& grad, double lr,
            std::size_t t) {
    if (cfg_.optimizer == Optimizer::sgd_momentum) {
      for (std::size_t i = 0; i < table.size(); ++i) {
        m_[i] = cfg_.momentum * m_[i] + grad[i];
        table[i] = static_cast<float>(static_cast<double>(table[i]) - lr * m_[i]);
      }
      return;
    }
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    const double decay = lr * cfg_.weight_decay;
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double g = grad[i];
      m_[i] = b1 * m_[i] + (1.0 - b1) * g;
      v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
      const double mhat = m_[i] / c1;
      const double vhat = v_[i] / c2;
      double p = static_cast<double>(table[i]);
      p -= decay * p;
      p -= lr * mhat / (std::sqrt(vhat) + cfg_.epsilon);
      table[i] = static_cast<float>(p);
    }
  }

 private:
  const TrainConfig& cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
};

std::string batch_dump(std::span<const QueryInstance> queries, const std::vector<std::size_t>& batch) {
  std::string s;
  for (std::size_t i = 0; i < batch.size() && i < 8; ++i) {
    if (!s.empty()) s += ",";
    s += queries[batch[i]].query_id;
  }
  if (batch.size() > 8) s += ",...";
  return s;
}

}  // namespace

TrainResult train(std::span<const QueryInstance> all_queries,
                  const std::vector<OrderConcept>& orders, const EncoderConfig& encoder,
                  EncoderParams initial, const TrainConfig& config) {
  config.validate();
  encoder.validate();
  if (!initial.matches(encoder)) throw ContractViolation("train: params shape does not match config");

  std::unordered_map<std::string, const std::string*> doc_text;
  for (const auto& o : orders) doc_text.emplace(o.order_id, &o.canonical_text);

  std::vector<QueryInstance> queries;
  for (const auto& q : all_queries) {
    if (config.variant_filter &&
        std::find(config.variant_filter->begin(), config.variant_filter->end(), q.variant) ==
            config.variant_filter->end())
      continue;
    if (!doc_text.contains(q.gold_order_id))
      throw ContractViolation("train: gold order " + q.gold_order_id + " has no canonical text");
    queries.push_back(q);
  }
  if (queries.size() < config.batch_size)
    throw ConfigError("train: " + std::to_string(queries.size()) +
                      " training queries is fewer than the batch size");

  const auto started = std::chrono::steady_clock::now();
  TrainResult result;
  result.params = std::move(initial);
  TrainReport& report = result.report;
  report.config = config;
  for (const auto& q : queries) ++report.variant_counts[static_cast<std::size_t>(q.variant)];

  std::vector<std::string> gold_ids;
  gold_ids.reserve(queries.size());
  for (const auto& q : queries) gold_ids.push_back(q.gold_order_id);
  BatchSampler sampler(gold_ids, config.batch_size, config.seed);

  report.steps_total = config.epochs * sampler.batches_per_epoch();
  LinearWarmupSchedule schedule(config.learning_rate, report.steps_total, config.warmup_ratio);
  OptimizerState optimizer(config, result.params.table.size());
  std::vector<double> grad(result.params.table.size(), 0.0);
  const LossConfig loss_cfg{config.scale};

  std::size_t step = 0;
  std::vector<std::string> texts;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    double epoch_sum = 0.0;
    const auto batches = sampler.next_epoch();
    for (const auto& batch : batches) {
      const std::size_t n = batch.size();
      texts.clear();
      MnrBatch mnr;
      for (auto qi : batch) {
        texts.push_back(queries[qi].text);
        mnr.gold_ids.push_back(queries[qi].gold_order_id);
      }
      for (auto qi : batch) texts.push_back(*doc_text.at(queries[qi].gold_order_id));

      // Tied towers: queries and documents go through the same table in one pass.
      TapedBatch fwd = encode_batch_with_tape(texts, result.params, encoder);
      mnr.query_embeddings = Matrix(n, encoder.dim);
      mnr.doc_embeddings = Matrix(n, encoder.dim);
      for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(fwd.embeddings.row(i).begin(), encoder.dim, mnr.query_embeddings.row(i).begin());
        std::copy_n(fwd.embeddings.row(n + i).begin(), encoder.dim, mnr.doc_embeddings.row(i).begin());
      }

      MnrEvaluation eval = mnr_loss_and_grad(mnr, loss_cfg);
      if (!std::isfinite(eval.value.loss))
        throw TrainingError(step, "non-finite loss at step " + std::to_string(step) +
                                      "; batch: " + batch_dump(queries, batch));

      Matrix upstream(2 * n, encoder.dim);
      for (std::size_t i = 0; i < n; ++i) {
        std::copy_n(eval.grad.query.row(i).begin(), encoder.dim, upstream.row(i).begin());
        std::copy_n(eval.grad.doc.row(i).begin(), encoder.dim, upstream.row(n + i).begin());
      }
      auto touched = backprop(fwd.tape, upstream, grad);

      optimizer.step(result.params.table, grad, schedule.at(step), step + 1);
      for (auto bucket : touched)
        std::fill_n(grad.begin() + static_cast<std::ptrdiff_t>(bucket) * encoder.dim, encoder.dim, 0.0);

      report.loss_trace.push_back(eval.value.loss);
      epoch_sum += eval.value.loss;
      ++step;
    }
    report.epoch_mean_loss.push_back(epoch_sum / static_cast<double>(batches.size()));
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

std::string train_report_json(const TrainReport& r) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  cfg["epochs"] = r.config.epochs;
  cfg["batch_size"] = r.config.batch_size;
  cfg["learning_rate"] = r.config.learning_rate;
  cfg["warmup_ratio"] = r.config.warmup_ratio;
  cfg["scale"] = r.config.scale;
  cfg["seed"] = r.config.seed;
  if (r.config.variant_filter) {
    auto arr = nlohmann::ordered_json::array();
    for (auto v : *r.config.variant_filter) arr.push_back(to_string(v));
    cfg["variants"] = std::move(arr);
  } else {
    cfg["variants"] = "all";
  }
  cfg["optimizer"] = to_string(r.config.optimizer);
  if (r.config.optimizer == Optimizer::adam_like) {
    cfg["beta1"] = r.config.beta1;
    cfg["beta2"] = r.config.beta2;
    cfg["epsilon"] = r.config.epsilon;
    cfg["weight_decay"] = r.config.weight_decay;
  } else {
    cfg["momentum"] = r.config.momentum;
  }
  j["config"] = std::move(cfg);
  j["steps_total"] = r.steps_total;
  nlohmann::ordered_json counts;
  for (auto v : kAllVariants) counts[std::string(to_string(v))] = r.variant_counts[static_cast<std::size_t>(v)];
  j["variant_counts"] = std::move(counts);
  auto rounded = [](const std::vector<double>& xs) {
    auto arr = nlohmann::ordered_json::array();
    for (double x : xs) arr.push_back(round_sig9(x));
    return arr;
  };
  j["epoch_mean_loss"] = rounded(r.epoch_mean_loss);
  j["loss_trace"] = rounded(r.loss_trace);
  j["checkpoint"] = r.checkpoint_path;
  j["wall_clock_seconds"] = round_sig9(r.wall_clock_seconds);
  return j.dump(2) + "\n";
}

}  // namespace orderlens
