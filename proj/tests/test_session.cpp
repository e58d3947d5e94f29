#include <doctest.h>

#include "orderlens/generator.hpp"
#include "orderlens/session.hpp"

using namespace orderlens;

namespace {

TranscriptChunk turn(std::uint32_t i, std::string text, Speaker s = Speaker::patient) {
  return {i, s, std::move(text)};
}

std::vector<std::string> texts(const SessionState& s) {
  std::vector<std::string> out;
  for (const auto& t : s.buffer()) out.push_back(t.text);
  return out;
}

struct Model {
  EncoderConfig encoder;
  EncoderParams params;
  Corpus corpus;
  VectorIndex index;

  Model() {
    encoder.dim = 32;
    encoder.n_buckets = 4096;
    params = random_params(encoder, 13);
    GeneratorConfig g;
    g.n_orders = 30;
    g.n_encounters = 6;
    corpus = generate_corpus(g);
    index = build_index(corpus.orders, params, encoder);
  }
};

// The ContextOnly query a record with this context would produce.
std::string context_only_text(const std::string& joined) {
  TrainingRecord r;
  r.record_id = "probe";
  r.command = "-";
  r.context = joined;
  r.reasoning = "-";
  return expand_variants(r)[static_cast<std::size_t>(Variant::ContextOnly)].text;
}

}  // namespace

TEST_SUITE("session") {
  TEST_CASE("FIFO eviction") {
    SessionState s(2);
    s.push_turn(turn(0, "a"));
    s.push_turn(turn(1, "b"));
    s.push_turn(turn(2, "c"));
    CHECK(texts(s) == std::vector<std::string>{"b", "c"});
    CHECK(s.turn_counter() == 3);
  }

  TEST_CASE("fewer pushes than capacity keeps everything in order") {
    SessionState s(6);
    s.push_turn(turn(0, "a"));
    s.push_turn(turn(1, "b"));
    CHECK(texts(s) == std::vector<std::string>{"a", "b"});
  }

  TEST_CASE("100 pushes keep the last 6") {
    SessionState s(6);
    std::vector<std::string> all;
    for (std::uint32_t i = 0; i < 100; ++i) {
      all.push_back("t" + std::to_string(i));
      s.push_turn(turn(i, all.back()));
    }
    CHECK(texts(s) == std::vector<std::string>(all.end() - 6, all.end()));
  }

  TEST_CASE("window text uses the ContextOnly format") {
    SessionState s(3);
    s.push_turn(turn(0, "my chest hurts"));
    s.push_turn(turn(1, "since yesterday", Speaker::provider));
    CHECK(window_text(s) == "CONTEXT: my chest hurts since yesterday");
    CHECK(window_text(s) == context_only_text("my chest hurts since yesterday"));
  }

  TEST_CASE("retrieve_now equals one-shot ContextOnly retrieval on every prefix") {
    Model m;
    SessionConfig cfg;
    cfg.window_turns = 4;
    cfg.top_k = 5;
    for (const auto& enc : m.corpus.encounters) {
      SessionState s(cfg.window_turns);
      std::vector<std::string> seen;
      for (const auto& t : enc.turns) {
        s.push_turn(t);
        seen.push_back(t.text);
        std::string joined;
        std::size_t from = seen.size() > cfg.window_turns ? seen.size() - cfg.window_turns : 0;
        for (std::size_t i = from; i < seen.size(); ++i) {
          if (!joined.empty()) joined += ' ';
          joined += seen[i];
        }
        auto oneshot = search(encode(context_only_text(joined), m.params, m.encoder), m.index, cfg.top_k);
        CHECK(retrieve_now(s, m.index, m.params, m.encoder, cfg) == oneshot);
      }
    }
  }

  TEST_CASE("determinism, empty buffer, distractor-only buffer") {
    Model m;
    SessionConfig cfg;
    SessionState empty(3);
    CHECK(retrieve_now(empty, m.index, m.params, m.encoder, cfg).ranked.empty());

    SessionState s(3);
    s.push_turn(turn(0, "How was the drive in today"));
    s.push_turn(turn(1, "Traffic was fine thanks", Speaker::provider));
    auto a = retrieve_now(s, m.index, m.params, m.encoder, cfg);
    auto b = retrieve_now(s, m.index, m.params, m.encoder, cfg);
    CHECK(a == b);
    CHECK(a.ranked.size() == cfg.top_k);
  }

  TEST_CASE("retrigger policy") {
    SessionConfig every;
    SessionConfig provider;
    provider.retrigger = Retrigger::on_provider_turn;
    CHECK(should_retrigger(every, turn(0, "x", Speaker::patient)));
    CHECK(should_retrigger(every, turn(0, "x", Speaker::provider)));
    CHECK_FALSE(should_retrigger(provider, turn(0, "x", Speaker::patient)));
    CHECK(should_retrigger(provider, turn(0, "x", Speaker::provider)));
    CHECK(parse_retrigger("on_provider_turn") == Retrigger::on_provider_turn);
    CHECK_FALSE(parse_retrigger("sometimes").has_value());
    CHECK_THROWS_AS(SessionState(0), ConfigError);
  }
}
