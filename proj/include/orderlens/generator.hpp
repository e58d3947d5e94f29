#pragma once

#include <cstddef>
#include <cstdint>

#include "orderlens/corpus.hpp"

namespace orderlens {

struct CountRange {
  std::size_t min = 0;
  std::size_t max = 0;
};

// Parameters of the template-based corpus generator. Every random choice is
// drawn from a single generator seeded with `seed`.
struct GeneratorConfig {
  std::uint64_t seed = 7;
  std::size_t n_orders = 200;
  std::size_t n_encounters = 200;
  CountRange orders_per_encounter{2, 4};
  CountRange distractor_turns{2, 4};
  // Same-category confusable orders added to each encounter pool per signed order.
  std::size_t confusables_per_order = 2;
  // Probability that a signed order is left out of its encounter's pool.
  double missing_gold_fraction = 0.1;
};

// The acceptance corpus: 200 orders, 200 encounters of exactly four signed
// orders each (800 records, 3200 queries).
GeneratorConfig acceptance_corpus_config();

// Number of orders available in the built-in ontology.
std::size_t ontology_size();

// Throws ConfigError on invalid counts or ranges.
Corpus generate_corpus(const GeneratorConfig& config);

}  // namespace orderlens
