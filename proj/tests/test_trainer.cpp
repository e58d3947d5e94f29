#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "orderlens/generator.hpp"
#include "orderlens/trainer.hpp"

using namespace orderlens;

namespace {

struct Fixture {
  Corpus corpus;
  std::vector<QueryInstance> queries;
  EncoderConfig encoder;
  TrainConfig train;

  Fixture() {
    GeneratorConfig g;
    g.n_orders = 40;
    g.n_encounters = 30;
    corpus = generate_corpus(g);
    queries = expand_all(corpus.records);
    encoder.dim = 32;
    encoder.n_buckets = 4096;
    train.epochs = 3;
    train.batch_size = 16;
  }
};

std::vector<std::string> repeated(const std::string& id, std::size_t n) {
  return std::vector<std::string>(n, id);
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("distinct golds fill one batch with an all-ones mask") {
    std::vector<std::string> gold;
    for (int i = 0; i < 64; ++i) gold.push_back("o" + std::to_string(i));
    BatchSampler s(gold, 64, 1);
    auto epoch = s.next_epoch();
    REQUIRE(epoch.size() == 1);
    CHECK(epoch[0].size() == 64);
    std::vector<std::string> batch_gold;
    for (auto i : epoch[0]) batch_gold.push_back(gold[i]);
    auto mask = build_mask(batch_gold);
    for (std::size_t i = 0; i < 64; ++i)
      for (std::size_t j = 0; j < 64; ++j) CHECK(mask(i, j));
  }

  TEST_CASE("one shared gold: batches are all duplicates and the mask handles them") {
    auto gold = repeated("A", 8);
    BatchSampler s(gold, 4, 1);
    auto epoch = s.next_epoch();
    REQUIRE(epoch.size() == 2);
    for (const auto& b : epoch) {
      REQUIRE(b.size() == 4);
      std::vector<std::string> g;
      for (auto i : b) g.push_back(gold[i]);
      auto mask = build_mask(g);
      for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) CHECK(mask(i, j) == (i == j));
    }
  }

  TEST_CASE("sampler separates duplicates when it can") {
    std::vector<std::string> gold;
    for (int copy = 0; copy < 4; ++copy)
      for (const char* g : {"A", "B", "C", "D"}) gold.push_back(g);
    BatchSampler s(gold, 4, 3);
    for (int e = 0; e < 5; ++e)
      for (const auto& b : s.next_epoch()) {
        std::set<std::string> ids;
        for (auto i : b) ids.insert(gold[i]);
        CHECK(ids.size() == 4);
      }
  }

  TEST_CASE("same seed gives the same batch sequence; every epoch covers all queries") {
    std::vector<std::string> gold;
    for (int i = 0; i < 50; ++i) gold.push_back("o" + std::to_string(i % 13));
    BatchSampler a(gold, 8, 42), b(gold, 8, 42), c(gold, 8, 43);
    bool any_diff = false;
    for (int e = 0; e < 3; ++e) {
      auto ea = a.next_epoch();
      CHECK(ea == b.next_epoch());
      if (ea != c.next_epoch()) any_diff = true;
      std::vector<std::size_t> all;
      for (const auto& batch : ea) {
        CHECK(batch.size() <= 8);
        all.insert(all.end(), batch.begin(), batch.end());
      }
      std::sort(all.begin(), all.end());
      std::vector<std::size_t> want(gold.size());
      for (std::size_t i = 0; i < want.size(); ++i) want[i] = i;
      CHECK(all == want);
    }
    CHECK(any_diff);
    CHECK(a.batches_per_epoch() == 7);
  }

  TEST_CASE("sampler rejects fewer queries than the batch size") {
    CHECK_THROWS_AS(BatchSampler(repeated("A", 3), 4, 1), ContractViolation);
  }

  TEST_CASE("schedule: linear warmup, peak at ceil(ratio * total), zero at the end") {
    LinearWarmupSchedule s(1.0, 25, 0.1);
    CHECK(s.warmup_steps() == 3);
    CHECK(s.at(0) == 0.0);
    CHECK(s.at(3) == 1.0);
    double peak = 0;
    std::size_t arg = 0;
    for (std::size_t t = 0; t <= 25; ++t)
      if (s.at(t) > peak) {
        peak = s.at(t);
        arg = t;
      }
    CHECK(arg == 3);
    CHECK(s.at(25) == 0.0);
    // piecewise linear: constant first differences on each side of the peak
    for (std::size_t t = 1; t < 3; ++t)
      CHECK(s.at(t + 1) - s.at(t) == doctest::Approx(s.at(1) - s.at(0)).epsilon(1e-12));
    for (std::size_t t = 4; t < 25; ++t)
      CHECK(s.at(t + 1) - s.at(t) == doctest::Approx(s.at(4) - s.at(3)).epsilon(1e-12));

    LinearWarmupSchedule none(2.0, 10, 0.0);
    CHECK(none.at(0) == 2.0);
    CHECK(none.at(10) == 0.0);
  }

  TEST_CASE("zero learning rate leaves params bit-exact") {
    Fixture f;
    f.train.learning_rate = 0.0;
    auto init = random_params(f.encoder, 5);
    for (auto opt : {Optimizer::adam_like, Optimizer::sgd_momentum}) {
      f.train.optimizer = opt;
      auto r = train(f.queries, f.corpus.orders, f.encoder, init, f.train);
      CHECK(r.params == init);
    }
  }

  TEST_CASE("training is reproducible and lowers the loss") {
    Fixture f;
    auto init = random_params(f.encoder, 5);
    auto a = train(f.queries, f.corpus.orders, f.encoder, init, f.train);
    auto b = train(f.queries, f.corpus.orders, f.encoder, init, f.train);
    CHECK(a.params == b.params);
    CHECK(a.report.loss_trace == b.report.loss_trace);
    REQUIRE(a.report.epoch_mean_loss.size() == 3);
    CHECK(a.report.epoch_mean_loss.back() < a.report.epoch_mean_loss.front());
    CHECK(a.report.steps_total == 3 * ((f.queries.size() + 15) / 16));
    CHECK(a.report.loss_trace.size() == a.report.steps_total);
    for (double l : a.report.loss_trace) CHECK(std::isfinite(l));
  }

  TEST_CASE("sgd_momentum also learns") {
    Fixture f;
    f.train.optimizer = Optimizer::sgd_momentum;
    f.train.learning_rate = 0.5;
    auto r = train(f.queries, f.corpus.orders, f.encoder, random_params(f.encoder, 5), f.train);
    CHECK(r.report.epoch_mean_loss.back() < r.report.epoch_mean_loss.front());
  }

  TEST_CASE("variant filter restricts the training set") {
    Fixture f;
    f.train.variant_filter = std::vector<Variant>{Variant::ContextReasoning};
    f.train.epochs = 1;
    auto r = train(f.queries, f.corpus.orders, f.encoder, random_params(f.encoder, 5), f.train);
    const auto& counts = r.report.variant_counts;
    CHECK(counts[static_cast<std::size_t>(Variant::ContextReasoning)] == f.corpus.records.size());
    CHECK(counts[static_cast<std::size_t>(Variant::CommandContext)] == 0);
    CHECK(counts[static_cast<std::size_t>(Variant::CommandOnly)] == 0);
    CHECK(counts[static_cast<std::size_t>(Variant::ContextOnly)] == 0);
  }

  TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.batch_size = 1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.warmup_ratio = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.scale = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.learning_rate = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.variant_filter = std::vector<Variant>{};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK(TrainConfig::paper_preset().learning_rate == 2e-5);
    CHECK(parse_optimizer("adam_like") == Optimizer::adam_like);
    CHECK_FALSE(parse_optimizer("adam").has_value());
  }

  TEST_CASE("train report JSON is stable apart from wall clock") {
    Fixture f;
    f.train.epochs = 1;
    auto r = train(f.queries, f.corpus.orders, f.encoder, random_params(f.encoder, 5), f.train);
    r.report.wall_clock_seconds = 0.0;
    auto j = train_report_json(r.report);
    CHECK(j.find("\"loss_trace\"") != std::string::npos);
    CHECK(j.find("\"beta1\": 0.9") != std::string::npos);
    CHECK(j.find("\"optimizer\": \"adam_like\"") != std::string::npos);
  }
}
