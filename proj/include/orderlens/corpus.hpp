#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "orderlens/common.hpp"

namespace orderlens {

enum class Category { medication, lab, imaging, procedure };
enum class Speaker { provider, patient };

// Declaration order is the canonical reporting order.
enum class Variant { CommandContext, CommandOnly, ContextOnly, ContextReasoning };
inline constexpr std::array<Variant, 4> kAllVariants = {
    Variant::CommandContext, Variant::CommandOnly, Variant::ContextOnly,
    Variant::ContextReasoning};

std::string_view to_string(Category c);
std::string_view to_string(Speaker s);
std::string_view to_string(Variant v);
std::optional<Category> parse_category(std::string_view s);
std::optional<Speaker> parse_speaker(std::string_view s);
std::optional<Variant> parse_variant(std::string_view s);

struct OrderConcept {
  std::string order_id;
  std::string canonical_text;
  Category category = Category::lab;

  bool operator==(const OrderConcept&) const = default;
};

struct TranscriptChunk {
  std::uint32_t index = 0;
  Speaker speaker = Speaker::patient;
  std::string text;

  bool operator==(const TranscriptChunk&) const = default;
};

struct EncounterRecord {
  std::string encounter_id;
  std::vector<TranscriptChunk> turns;
  std::vector<std::string> signed_order_ids;
  // Encounter-scoped retrieval pool. May omit some signed orders.
  std::vector<std::string> candidate_order_ids;

  bool operator==(const EncounterRecord&) const = default;
};

// Supervision bundle for one signed order.
struct TrainingRecord {
  std::string record_id;
  std::string encounter_id;
  std::string order_id;
  std::string command;
  std::string context;
  std::string reasoning;
  double confidence = 1.0;
  std::vector<std::uint32_t> support_indices;

  bool operator==(const TrainingRecord&) const = default;
};

struct QueryInstance {
  std::string query_id;
  std::string text;
  Variant variant = Variant::CommandContext;
  std::string gold_order_id;
  std::string encounter_id;

  bool operator==(const QueryInstance&) const = default;
};

struct Corpus {
  std::vector<OrderConcept> orders;
  std::vector<EncounterRecord> encounters;
  std::vector<TrainingRecord> records;

  bool operator==(const Corpus&) const = default;

  const OrderConcept* find_order(std::string_view order_id) const;
  const EncounterRecord* find_encounter(std::string_view encounter_id) const;
};

// The four query formulations of one record, in kAllVariants order.
std::vector<QueryInstance> expand_variants(const TrainingRecord& record);

std::vector<QueryInstance> expand_all(const std::vector<TrainingRecord>& records);

// Space-joined text of the turns named by `indices`, in the order given.
std::string join_turns(const EncounterRecord& encounter,
                       const std::vector<std::uint32_t>& indices);

struct ValidationIssue {
  std::string file;
  std::string record_id;
  std::string field;
  std::string message;

  std::string to_string() const;
};

class IngestionError : public Error {
 public:
  explicit IngestionError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

// Checks every type invariant and cross-reference. Empty result means valid.
std::vector<ValidationIssue> validate(const Corpus& corpus);

struct CorpusPaths {
  std::filesystem::path orders;
  std::filesystem::path encounters;
  std::filesystem::path records;

  static CorpusPaths in_directory(const std::filesystem::path& dir);
};

struct LoadOptions {
  // Records with confidence below this are dropped after validation.
  double min_confidence = 0.0;
};

Corpus load_corpus(const CorpusPaths& paths, const LoadOptions& options = {});

// Reads and validates an orders file on its own.
std::vector<OrderConcept> load_orders(const std::filesystem::path& path);

void write_orders_jsonl(std::ostream& out, const std::vector<OrderConcept>& orders);
void write_encounters_jsonl(std::ostream& out, const std::vector<EncounterRecord>& encounters);
void write_records_jsonl(std::ostream& out, const std::vector<TrainingRecord>& records);
void save_corpus(const Corpus& corpus, const CorpusPaths& paths);

// Deterministic hold-out split by encounter. The round(fraction * n)
// encounters with the smallest id hash form the held-out side.
struct CorpusSplit {
  std::unordered_set<std::string> heldout_encounters;

  bool is_heldout(const std::string& encounter_id) const {
    return heldout_encounters.contains(encounter_id);
  }
};
CorpusSplit split_by_encounter(const Corpus& corpus, double heldout_fraction);

enum class SplitSide { all, train, test };
std::optional<SplitSide> parse_split_side(std::string_view s);
std::vector<TrainingRecord> select_records(const Corpus& corpus, const CorpusSplit& split,
                                           SplitSide side);

// encounter_id -> candidate pool, for encounter-scoped evaluation.
using CandidatePools = std::unordered_map<std::string, std::unordered_set<std::string>>;
CandidatePools candidate_pools(const Corpus& corpus);

}  // namespace orderlens
