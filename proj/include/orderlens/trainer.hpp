#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "orderlens/corpus.hpp"
#include "orderlens/encoder.hpp"
#include "orderlens/objective.hpp"

namespace orderlens {

enum class Optimizer { sgd_momentum, adam_like };
std::optional<Optimizer> parse_optimizer(std::string_view s);
std::string_view to_string(Optimizer o);

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t batch_size = 64;
  double learning_rate = 2e-3;
  double warmup_ratio = 0.1;
  double scale = 20.0;
  std::uint64_t seed = 7;
  // When set, only queries of these variants are trained on.
  std::optional<std::vector<Variant>> variant_filter;
  Optimizer optimizer = Optimizer::adam_like;

  // adam_like: bias-corrected moments with decoupled weight decay.
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
  // sgd_momentum
  double momentum = 0.9;

  // Published fine-tuning hyperparameters (learning rate 2e-5); too small to
  // move the hashed table noticeably in five epochs.
  static TrainConfig paper_preset();

  void validate() const;
};

// Linear warmup to the peak over ceil(warmup_ratio * total) steps, then linear
// decay reaching 0 at step `total`.
class LinearWarmupSchedule {
 public:
  LinearWarmupSchedule(double peak, std::size_t total_steps, double warmup_ratio);

  double at(std::size_t step) const;
  std::size_t warmup_steps() const noexcept { return warmup_; }
  std::size_t total_steps() const noexcept { return total_; }

 private:
  double peak_;
  std::size_t total_;
  std::size_t warmup_;
};

// Seeded per-epoch shuffle followed by first-fit packing: each query goes to
// the earliest batch that has room and does not already hold its gold order.
// Queries that fit nowhere fill the remaining slots in batch order.
class BatchSampler {
 public:
  BatchSampler(std::vector<std::string> gold_ids, std::size_t batch_size, std::uint64_t seed);

  // Batches of query positions; every position appears exactly once.
  std::vector<std::vector<std::size_t>> next_epoch();

  std::size_t batches_per_epoch() const noexcept;

 private:
  std::vector<std::string> gold_ids_;
  std::size_t batch_size_;
  Rng rng_;
};

class TrainingError : public Error {
 public:
  TrainingError(std::size_t step, const std::string& message) : Error("training", message), step_(step) {}
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

struct TrainReport {
  TrainConfig config;
  std::vector<double> loss_trace;       // one entry per optimizer step
  std::vector<double> epoch_mean_loss;  // mean of loss_trace per epoch
  std::size_t steps_total = 0;
  std::array<std::size_t, 4> variant_counts{};  // training queries per variant
  std::string checkpoint_path;
  double wall_clock_seconds = 0.0;
};

struct TrainResult {
  EncoderParams params;
  TrainReport report;
};

// Fine-tunes `initial` on (query, gold order canonical text) pairs with the
// duplicate-safe MNR objective. Single-threaded and deterministic given the
// config seed. Throws TrainingError on a non-finite loss.
TrainResult train(std::span<const QueryInstance> queries, const std::vector<OrderConcept>& orders,
                  const EncoderConfig& encoder, EncoderParams initial, const TrainConfig& config);

std::string train_report_json(const TrainReport& report);

}  // namespace orderlens
