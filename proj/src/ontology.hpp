#pragma once

#include <string>
#include <vector>

#include "orderlens/corpus.hpp"

namespace orderlens::detail {

// Template material for one orderable: how clinicians ask for it, what the
// conversation sounds like when it is warranted, and what it evaluates.
struct OrderSpec {
  std::string canonical_text;
  Category category;
  std::vector<std::string> aliases;   // used by command templates
  std::vector<std::string> findings;  // evidence phrases, at least two
  std::string purpose;                // reasoning target
};

// Full built-in ontology. Stable order; ids are assigned from position.
const std::vector<OrderSpec>& builtin_ontology();

}  // namespace orderlens::detail
