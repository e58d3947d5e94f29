#include "orderlens/generator.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <string>
#include <unordered_set>

#include "ontology.hpp"

namespace orderlens {
namespace {

using detail::OrderSpec;

// clang-format off
constexpr std::array<const char*, 6> kPatientTemplates = {
    "I have had {f} for {duration}",
    "I've been dealing with {f} since {onset}",
    "Lately I keep noticing {f}",
    "It started {onset} with {f}",
    "My main worry today is {f}",
    "Honestly the worst part is {f}",
};

constexpr std::array<const char*, 4> kProviderTemplates = {
    "You mentioned {f} earlier, is that still going on",
    "So along with that you also have {f}",
    "Okay, so you are describing {f}",
    "Tell me more about {f}",
};

constexpr std::array<const char*, 5> kDurations = {
    "two days", "about a week", "three weeks", "a couple of months", "most of the winter"};

constexpr std::array<const char*, 5> kOnsets = {
    "yesterday", "last weekend", "a few days ago", "after my trip", "this morning"};

constexpr std::array<const char*, 4> kImagingCommands = {
    "Order a {alias}", "Let's get a {alias}", "Please schedule a {alias}", "I want a {alias} today"};
constexpr std::array<const char*, 4> kLabCommands = {
    "Order a {alias}", "Send a {alias}", "Let's check a {alias}", "Draw a {alias} today"};
constexpr std::array<const char*, 4> kMedicationCommands = {
    "Start {alias}", "Prescribe {alias}", "Let's give {alias}", "Order {alias} now"};
constexpr std::array<const char*, 4> kProcedureCommands = {
    "Schedule a {alias}", "Let's do a {alias}", "Order a {alias}", "Set up a {alias} soon"};

constexpr std::array<const char*, 3> kReasoningTemplates = {
    "{Alias} is indicated to evaluate {purpose}",
    "Given {f}, {alias} helps assess {purpose}",
    "{Alias} is appropriate because {f} raises concern for {purpose}",
};

struct Distractor {
  Speaker speaker;
  const char* text;
};

constexpr std::array<Distractor, 16> kDistractors = {{
    {Speaker::provider, "Good morning, what brings you in today"},
    {Speaker::provider, "Let me pull up your chart for a second"},
    {Speaker::provider, "Any allergies to medications"},
    {Speaker::provider, "Are you still taking the same medicines as last time"},
    {Speaker::provider, "Let me take a quick listen"},
    {Speaker::provider, "Okay, I'm going to put a few things in"},
    {Speaker::provider, "Do you have any questions for me"},
    {Speaker::provider, "We'll follow up in a few weeks"},
    {Speaker::patient, "The traffic on the way here was terrible"},
    {Speaker::patient, "My daughter drove me today"},
    {Speaker::patient, "I'm doing alright otherwise"},
    {Speaker::patient, "I've been trying to walk more"},
    {Speaker::patient, "No allergies that I know of"},
    {Speaker::patient, "Work has been stressful this month"},
    {Speaker::patient, "I forgot my list at home"},
    {Speaker::patient, "Thanks for seeing me on short notice"},
}};
// clang-format on

template <std::size_t N>
const char* pick(Rng& rng, const std::array<const char*, N>& bank) {
  return bank[rng.below(N)];
}

std::string replace_all(std::string s, std::string_view key, std::string_view value) {
  for (auto pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
    s.replace(pos, key.size(), value);
  return s;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string hex_id(const char* prefix, std::uint64_t h, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*llx", prefix, digits,
                static_cast<unsigned long long>(h >> (64 - 4 * digits)));
  return buf;
}

std::string category_prefix(Category c) {
  switch (c) {
    case Category::medication: return "med";
    case Category::lab: return "lab";
    case Category::imaging: return "img";
    case Category::procedure: return "prc";
  }
  return "ord";
}

std::string symptom_turn(Rng& rng, Speaker speaker, const std::string& finding) {
  std::string t = speaker == Speaker::patient ? pick(rng, kPatientTemplates)
                                              : pick(rng, kProviderTemplates);
  t = replace_all(t, "{f}", finding);
  t = replace_all(t, "{duration}", pick(rng, kDurations));
  t = replace_all(t, "{onset}", pick(rng, kOnsets));
  return t;
}

std::string command_for(Rng& rng, const OrderSpec& spec) {
  const char* tmpl = nullptr;
  switch (spec.category) {
    case Category::imaging: tmpl = pick(rng, kImagingCommands); break;
    case Category::lab: tmpl = pick(rng, kLabCommands); break;
    case Category::medication: tmpl = pick(rng, kMedicationCommands); break;
    case Category::procedure: tmpl = pick(rng, kProcedureCommands); break;
  }
  const std::string& alias = spec.aliases[rng.below(spec.aliases.size())];
  return replace_all(tmpl, "{alias}", alias);
}

std::string reasoning_for(Rng& rng, const OrderSpec& spec, const std::string& finding) {
  const std::string& alias = spec.aliases[rng.below(spec.aliases.size())];
  std::string t = pick(rng, kReasoningTemplates);
  t = replace_all(t, "{Alias}", capitalized(alias));
  t = replace_all(t, "{alias}", alias);
  t = replace_all(t, "{f}", finding);
  t = replace_all(t, "{purpose}", spec.purpose);
  return capitalized(t);
}

void check(const GeneratorConfig& c) {
  if (c.n_orders < 2) throw ConfigError("n_orders must be at least 2");
  if (c.n_orders > ontology_size())
    throw ConfigError("n_orders exceeds the built-in ontology size " +
                      std::to_string(ontology_size()));
  if (c.n_encounters == 0) throw ConfigError("n_encounters must be positive");
  if (c.orders_per_encounter.min == 0 || c.orders_per_encounter.min > c.orders_per_encounter.max)
    throw ConfigError("orders_per_encounter must be a non-empty range with min >= 1");
  if (c.orders_per_encounter.max > c.n_orders)
    throw ConfigError("orders_per_encounter.max exceeds n_orders");
  if (c.distractor_turns.min > c.distractor_turns.max)
    throw ConfigError("distractor_turns must be a non-empty range");
  if (!(c.missing_gold_fraction >= 0.0 && c.missing_gold_fraction <= 1.0))
    throw ConfigError("missing_gold_fraction must lie in [0,1]");
}

// A turn before index assignment; `owner` is the position of the signed order
// within the encounter, or -1 for distractors.
struct PendingTurn {
  Speaker speaker;
  std::string text;
  int owner;
};

}  // namespace

GeneratorConfig acceptance_corpus_config() {
  GeneratorConfig c;
  c.seed = 7;
  c.n_orders = 200;
  c.n_encounters = 200;
  c.orders_per_encounter = {4, 4};
  c.distractor_turns = {2, 4};
  return c;
}

std::size_t ontology_size() { return detail::builtin_ontology().size(); }

Corpus generate_corpus(const GeneratorConfig& config) {
  check(config);
  Rng rng(config.seed);
  const auto& ontology = detail::builtin_ontology();

  // Stable per-category ordinals give ids that do not depend on the subset.
  std::vector<std::string> ontology_ids;
  {
    std::array<int, 4> counters{};
    for (const auto& spec : ontology) {
      int n = ++counters[static_cast<std::size_t>(spec.category)];
      char buf[16];
      std::snprintf(buf, sizeof buf, "-%03d", n);
      ontology_ids.push_back("ord-" + category_prefix(spec.category) + buf);
    }
  }

  std::vector<std::size_t> chosen(ontology.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
  if (config.n_orders < ontology.size()) {
    rng.shuffle(chosen);
    chosen.resize(config.n_orders);
    std::sort(chosen.begin(), chosen.end());
  }

  Corpus corpus;
  for (std::size_t idx : chosen)
    corpus.orders.push_back({ontology_ids[idx], ontology[idx].canonical_text, ontology[idx].category});

  // Deck of order positions: every order is drawn once before any repeats.
  std::vector<std::size_t> deck;
  auto refill = [&] {
    deck.resize(chosen.size());
    for (std::size_t i = 0; i < deck.size(); ++i) deck[i] = i;
    rng.shuffle(deck);
  };

  for (std::size_t e = 0; e < config.n_encounters; ++e) {
    EncounterRecord enc;
    enc.encounter_id =
        hex_id("enc-", hash_bytes("enc:" + std::to_string(e), config.seed), 10);

    const auto n_signed =
        static_cast<std::size_t>(rng.between(config.orders_per_encounter.min,
                                             config.orders_per_encounter.max));
    std::vector<std::size_t> signed_pos;
    while (signed_pos.size() < n_signed) {
      if (deck.empty()) refill();
      auto it = std::find_if(deck.rbegin(), deck.rend(), [&](std::size_t p) {
        return std::find(signed_pos.begin(), signed_pos.end(), p) == signed_pos.end();
      });
      if (it == deck.rend()) {
        refill();
        continue;
      }
      signed_pos.push_back(*it);
      deck.erase(std::next(it).base());
    }

    // Each signed order contributes a block of two adjacent support turns.
    struct OrderDraft {
      std::string finding_a;
      std::string finding_b;
    };
    std::vector<OrderDraft> drafts;
    std::vector<std::vector<PendingTurn>> blocks;
    for (std::size_t k = 0; k < signed_pos.size(); ++k) {
      const OrderSpec& spec = ontology[chosen[signed_pos[k]]];
      std::size_t a = rng.below(spec.findings.size());
      std::size_t b = (a + 1 + rng.below(spec.findings.size() - 1)) % spec.findings.size();
      drafts.push_back({spec.findings[a], spec.findings[b]});
      Speaker second = rng.below(2) == 0 ? Speaker::patient : Speaker::provider;
      blocks.push_back({{Speaker::patient, symptom_turn(rng, Speaker::patient, spec.findings[a]),
                         static_cast<int>(k)},
                        {second, symptom_turn(rng, second, spec.findings[b]), static_cast<int>(k)}});
    }
    const auto n_distract = rng.between(config.distractor_turns.min, config.distractor_turns.max);
    for (std::uint64_t d = 0; d < n_distract; ++d) {
      const auto& dis = kDistractors[rng.below(kDistractors.size())];
      blocks.push_back({{dis.speaker, dis.text, -1}});
    }
    rng.shuffle(blocks);

    std::vector<std::vector<std::uint32_t>> support(signed_pos.size());
    std::uint32_t index = 0;
    for (auto& block : blocks) {
      for (auto& turn : block) {
        if (turn.owner >= 0) support[static_cast<std::size_t>(turn.owner)].push_back(index);
        enc.turns.push_back({index, turn.speaker, std::move(turn.text)});
        ++index;
      }
    }

    std::unordered_set<std::size_t> pool;
    for (std::size_t k = 0; k < signed_pos.size(); ++k) {
      enc.signed_order_ids.push_back(corpus.orders[signed_pos[k]].order_id);
      if (rng.uniform() >= config.missing_gold_fraction) pool.insert(signed_pos[k]);
    }
    for (std::size_t k = 0; k < signed_pos.size(); ++k) {
      const Category cat = corpus.orders[signed_pos[k]].category;
      std::vector<std::size_t> same;
      for (std::size_t p = 0; p < corpus.orders.size(); ++p) {
        bool is_signed = std::find(signed_pos.begin(), signed_pos.end(), p) != signed_pos.end();
        if (corpus.orders[p].category == cat && !is_signed) same.push_back(p);
      }
      rng.shuffle(same);
      for (std::size_t c = 0; c < std::min(config.confusables_per_order, same.size()); ++c)
        pool.insert(same[c]);
    }
    for (std::size_t p : pool) enc.candidate_order_ids.push_back(corpus.orders[p].order_id);
    std::sort(enc.candidate_order_ids.begin(), enc.candidate_order_ids.end());

    for (std::size_t k = 0; k < signed_pos.size(); ++k) {
      const OrderSpec& spec = ontology[chosen[signed_pos[k]]];
      TrainingRecord rec;
      rec.record_id = hex_id(
          "rec-", hash_bytes("rec:" + std::to_string(e) + ":" + std::to_string(k), config.seed), 12);
      rec.encounter_id = enc.encounter_id;
      rec.order_id = corpus.orders[signed_pos[k]].order_id;
      rec.command = command_for(rng, spec);
      rec.support_indices = support[k];
      rec.context = join_turns(enc, rec.support_indices);
      rec.reasoning = reasoning_for(rng, spec, drafts[k].finding_a);
      rec.confidence = std::round(rng.uniform(0.6, 1.0) * 1000.0) / 1000.0;
      corpus.records.push_back(std::move(rec));
    }
    corpus.encounters.push_back(std::move(enc));
  }
  return corpus;
}

}  // namespace orderlens
