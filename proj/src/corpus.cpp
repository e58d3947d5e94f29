#include "orderlens/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

namespace orderlens {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Category c) {
  switch (c) {
    case Category::medication: return "medication";
    case Category::lab: return "lab";
    case Category::imaging: return "imaging";
    case Category::procedure: return "procedure";
  }
  return "?";
}

std::string_view to_string(Speaker s) {
  return s == Speaker::provider ? "provider" : "patient";
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::CommandContext: return "CommandContext";
    case Variant::CommandOnly: return "CommandOnly";
    case Variant::ContextOnly: return "ContextOnly";
    case Variant::ContextReasoning: return "ContextReasoning";
  }
  return "?";
}

std::optional<Category> parse_category(std::string_view s) {
  for (auto c : {Category::medication, Category::lab, Category::imaging, Category::procedure})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

std::optional<Speaker> parse_speaker(std::string_view s) {
  if (s == "provider") return Speaker::provider;
  if (s == "patient") return Speaker::patient;
  return std::nullopt;
}

std::optional<Variant> parse_variant(std::string_view s) {
  for (auto v : kAllVariants)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

const OrderConcept* Corpus::find_order(std::string_view order_id) const {
  for (const auto& o : orders)
    if (o.order_id == order_id) return &o;
  return nullptr;
}

const EncounterRecord* Corpus::find_encounter(std::string_view encounter_id) const {
  for (const auto& e : encounters)
    if (e.encounter_id == encounter_id) return &e;
  return nullptr;
}

std::vector<QueryInstance> expand_variants(const TrainingRecord& r) {
  std::vector<QueryInstance> out;
  out.reserve(4);
  for (Variant v : kAllVariants) {
    QueryInstance q;
    q.query_id = r.record_id + "#" + std::string(to_string(v));
    q.variant = v;
    q.gold_order_id = r.order_id;
    q.encounter_id = r.encounter_id;
    switch (v) {
      case Variant::CommandContext:
        q.text = "COMMAND: " + r.command + " CONTEXT: " + r.context;
        break;
      case Variant::CommandOnly:
        q.text = "COMMAND: " + r.command;
        break;
      case Variant::ContextOnly:
        q.text = "CONTEXT: " + r.context;
        break;
      case Variant::ContextReasoning:
        q.text = "CONTEXT: " + r.context + " REASONING: " + r.reasoning;
        break;
    }
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QueryInstance> expand_all(const std::vector<TrainingRecord>& records) {
  std::vector<QueryInstance> out;
  out.reserve(records.size() * 4);
  for (const auto& r : records) {
    auto qs = expand_variants(r);
    out.insert(out.end(), std::make_move_iterator(qs.begin()), std::make_move_iterator(qs.end()));
  }
  return out;
}

std::string join_turns(const EncounterRecord& encounter, const std::vector<std::uint32_t>& indices) {
  std::string out;
  for (auto idx : indices) {
    auto it = std::find_if(encounter.turns.begin(), encounter.turns.end(),
                           [idx](const TranscriptChunk& t) { return t.index == idx; });
    if (it == encounter.turns.end()) continue;
    if (!out.empty()) out += ' ';
    out += it->text;
  }
  return out;
}

std::string ValidationIssue::to_string() const {
  std::string s = file;
  if (!record_id.empty()) s += " record " + record_id;
  s += " field " + field + ": " + message;
  return s;
}

namespace {

std::string summarize(const std::vector<ValidationIssue>& issues) {
  if (issues.empty()) return "ingestion failed";
  std::string s = issues.front().to_string();
  if (issues.size() > 1) s += " (+" + std::to_string(issues.size() - 1) + " more)";
  return s;
}

}  // namespace

IngestionError::IngestionError(std::vector<ValidationIssue> issues)
    : Error("ingestion", summarize(issues)), issues_(std::move(issues)) {}

std::vector<ValidationIssue> validate(const Corpus& c) {
  std::vector<ValidationIssue> issues;
  auto issue = [&](std::string file, std::string id, std::string field, std::string msg) {
    issues.push_back({std::move(file), std::move(id), std::move(field), std::move(msg)});
  };

  std::unordered_set<std::string> order_ids;
  for (const auto& o : c.orders) {
    if (!order_ids.insert(o.order_id).second)
      issue("orders", o.order_id, "order_id", "duplicate order_id");
    if (o.canonical_text.empty()) issue("orders", o.order_id, "canonical_text", "empty");
  }

  std::unordered_map<std::string, const EncounterRecord*> encounters;
  for (const auto& e : c.encounters) {
    if (!encounters.emplace(e.encounter_id, &e).second)
      issue("encounters", e.encounter_id, "encounter_id", "duplicate encounter_id");
    if (e.turns.empty()) issue("encounters", e.encounter_id, "turns", "no turns");
    for (std::size_t i = 0; i < e.turns.size(); ++i) {
      if (i > 0 && e.turns[i].index <= e.turns[i - 1].index)
        issue("encounters", e.encounter_id, "turns", "turn indices not strictly increasing");
      if (e.turns[i].text.empty())
        issue("encounters", e.encounter_id, "turns",
              "empty text at index " + std::to_string(e.turns[i].index));
    }
    for (const auto& id : e.signed_order_ids)
      if (!order_ids.contains(id))
        issue("encounters", e.encounter_id, "signed_order_ids", "dangling order_id " + id);
    for (const auto& id : e.candidate_order_ids)
      if (!order_ids.contains(id))
        issue("encounters", e.encounter_id, "candidate_order_ids", "dangling order_id " + id);
  }

  std::unordered_set<std::string> record_ids;
  for (const auto& r : c.records) {
    const std::string& rid = r.record_id;
    if (!record_ids.insert(rid).second) issue("records", rid, "record_id", "duplicate record_id");
    if (!order_ids.contains(r.order_id))
      issue("records", rid, "order_id", "dangling order_id " + r.order_id);
    if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
      issue("records", rid, "confidence", "must lie in [0,1]");
    if (r.command.empty()) issue("records", rid, "command", "empty");
    if (r.context.empty()) issue("records", rid, "context", "empty");
    if (r.reasoning.empty()) issue("records", rid, "reasoning", "empty");

    auto enc = encounters.find(r.encounter_id);
    if (enc == encounters.end()) {
      issue("records", rid, "encounter_id", "dangling encounter_id " + r.encounter_id);
      continue;
    }
    const EncounterRecord& e = *enc->second;
    if (std::find(e.signed_order_ids.begin(), e.signed_order_ids.end(), r.order_id) ==
        e.signed_order_ids.end())
      issue("records", rid, "order_id", "gold order not signed in encounter " + e.encounter_id);
    bool indices_ok = !r.support_indices.empty();
    if (!indices_ok) issue("records", rid, "support_indices", "empty");
    for (auto idx : r.support_indices) {
      bool found = std::any_of(e.turns.begin(), e.turns.end(),
                               [idx](const TranscriptChunk& t) { return t.index == idx; });
      if (!found) {
        issue("records", rid, "support_indices",
              "turn " + std::to_string(idx) + " not in encounter");
        indices_ok = false;
      }
    }
    if (indices_ok && join_turns(e, r.support_indices) != r.context)
      issue("records", rid, "context", "does not match text of support turns");
  }
  return issues;
}

CorpusPaths CorpusPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "orders.jsonl", dir / "encounters.jsonl", dir / "records.jsonl"};
}

namespace {

struct FieldProblem : std::runtime_error {
  FieldProblem(std::string f, const std::string& m) : std::runtime_error(m), field(std::move(f)) {}
  std::string field;
};

template <typename Fn>
void read_jsonl(const std::filesystem::path& path, const std::string& file_tag,
                std::vector<ValidationIssue>& issues, Fn&& on_object) {
  std::ifstream in(path);
  if (!in) throw IngestionError({{file_tag, "", "path", "cannot open " + path.string()}});
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    ojson j;
    try {
      j = ojson::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      issues.push_back({file_tag, "", "line " + std::to_string(line_no), "malformed JSON"});
      continue;
    }
    try {
      on_object(j);
    } catch (const FieldProblem& e) {
      std::string id;
      for (const char* key : {"order_id", "encounter_id", "record_id"}) {
        if (j.is_object() && j.contains(key) && j[key].is_string()) {
          id = j[key].get<std::string>();
          break;
        }
      }
      issues.push_back({file_tag, id, e.field, std::string(e.what()) + " (line " +
                                                   std::to_string(line_no) + ")"});
    }
  }
}

// Reads a field, naming it in the error if missing or mistyped.
template <typename T>
T field(const ojson& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw FieldProblem(key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FieldProblem(key, "wrong type");
  }
}

void read_orders(const std::filesystem::path& path, std::vector<OrderConcept>& out,
                 std::vector<ValidationIssue>& issues) {
  read_jsonl(path, "orders", issues, [&](const ojson& j) {
    OrderConcept o;
    o.order_id = field<std::string>(j, "order_id");
    o.canonical_text = field<std::string>(j, "canonical_text");
    auto cat = parse_category(field<std::string>(j, "category"));
    if (!cat) {
      issues.push_back({"orders", o.order_id, "category", "unknown category"});
      return;
    }
    o.category = *cat;
    out.push_back(std::move(o));
  });
}

}  // namespace

Corpus load_corpus(const CorpusPaths& paths, const LoadOptions& options) {
  Corpus c;
  std::vector<ValidationIssue> issues;

  read_orders(paths.orders, c.orders, issues);

  read_jsonl(paths.encounters, "encounters", issues, [&](const ojson& j) {
    EncounterRecord e;
    e.encounter_id = field<std::string>(j, "encounter_id");
    for (const auto& t : field<ojson>(j, "turns")) {
      TranscriptChunk chunk;
      chunk.index = field<std::uint32_t>(t, "index");
      auto sp = parse_speaker(field<std::string>(t, "speaker"));
      if (!sp) {
        issues.push_back({"encounters", e.encounter_id, "speaker", "unknown speaker"});
        return;
      }
      chunk.speaker = *sp;
      chunk.text = field<std::string>(t, "text");
      e.turns.push_back(std::move(chunk));
    }
    e.signed_order_ids = field<std::vector<std::string>>(j, "signed_order_ids");
    e.candidate_order_ids = field<std::vector<std::string>>(j, "candidate_order_ids");
    c.encounters.push_back(std::move(e));
  });

  read_jsonl(paths.records, "records", issues, [&](const ojson& j) {
    TrainingRecord r;
    r.record_id = field<std::string>(j, "record_id");
    r.encounter_id = field<std::string>(j, "encounter_id");
    r.order_id = field<std::string>(j, "order_id");
    r.command = field<std::string>(j, "command");
    r.context = field<std::string>(j, "context");
    r.reasoning = field<std::string>(j, "reasoning");
    const auto& conf = field<ojson>(j, "confidence");
    if (!conf.is_number()) {
      issues.push_back({"records", r.record_id, "confidence", "not a number"});
      return;
    }
    r.confidence = conf.get<double>();
    r.support_indices = field<std::vector<std::uint32_t>>(j, "support_indices");
    c.records.push_back(std::move(r));
  });

  auto structural = validate(c);
  issues.insert(issues.end(), structural.begin(), structural.end());
  if (!issues.empty()) throw IngestionError(std::move(issues));

  if (options.min_confidence > 0.0) {
    std::erase_if(c.records,
                  [&](const TrainingRecord& r) { return r.confidence < options.min_confidence; });
  }
  return c;
}

std::vector<OrderConcept> load_orders(const std::filesystem::path& path) {
  Corpus c;
  std::vector<ValidationIssue> issues;
  read_orders(path, c.orders, issues);
  auto structural = validate(c);
  issues.insert(issues.end(), structural.begin(), structural.end());
  if (!issues.empty()) throw IngestionError(std::move(issues));
  return std::move(c.orders);
}

void write_orders_jsonl(std::ostream& out, const std::vector<OrderConcept>& orders) {
  for (const auto& o : orders) {
    ojson j;
    j["order_id"] = o.order_id;
    j["canonical_text"] = o.canonical_text;
    j["category"] = to_string(o.category);
    out << j.dump() << '\n';
  }
}

void write_encounters_jsonl(std::ostream& out, const std::vector<EncounterRecord>& encounters) {
  for (const auto& e : encounters) {
    ojson j;
    j["encounter_id"] = e.encounter_id;
    ojson turns = ojson::array();
    for (const auto& t : e.turns) {
      ojson tj;
      tj["index"] = t.index;
      tj["speaker"] = to_string(t.speaker);
      tj["text"] = t.text;
      turns.push_back(std::move(tj));
    }
    j["turns"] = std::move(turns);
    j["signed_order_ids"] = e.signed_order_ids;
    j["candidate_order_ids"] = e.candidate_order_ids;
    out << j.dump() << '\n';
  }
}

void write_records_jsonl(std::ostream& out, const std::vector<TrainingRecord>& records) {
  for (const auto& r : records) {
    ojson j;
    j["record_id"] = r.record_id;
    j["encounter_id"] = r.encounter_id;
    j["order_id"] = r.order_id;
    j["command"] = r.command;
    j["context"] = r.context;
    j["reasoning"] = r.reasoning;
    j["confidence"] = r.confidence;
    j["support_indices"] = r.support_indices;
    out << j.dump() << '\n';
  }
}

void save_corpus(const Corpus& corpus, const CorpusPaths& paths) {
  auto open = [](const std::filesystem::path& p) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
  };
  {
    auto out = open(paths.orders);
    write_orders_jsonl(out, corpus.orders);
  }
  {
    auto out = open(paths.encounters);
    write_encounters_jsonl(out, corpus.encounters);
  }
  {
    auto out = open(paths.records);
    write_records_jsonl(out, corpus.records);
  }
}

CorpusSplit split_by_encounter(const Corpus& corpus, double heldout_fraction) {
  if (!(heldout_fraction >= 0.0 && heldout_fraction <= 1.0))
    throw ConfigError("heldout fraction must lie in [0,1]");
  std::vector<std::pair<std::uint64_t, std::string>> keyed;
  keyed.reserve(corpus.encounters.size());
  for (const auto& e : corpus.encounters) keyed.emplace_back(hash_bytes(e.encounter_id), e.encounter_id);
  std::sort(keyed.begin(), keyed.end());
  auto n_heldout = static_cast<std::size_t>(
      std::llround(heldout_fraction * static_cast<double>(keyed.size())));
  CorpusSplit split;
  for (std::size_t i = 0; i < n_heldout; ++i) split.heldout_encounters.insert(keyed[i].second);
  return split;
}

std::optional<SplitSide> parse_split_side(std::string_view s) {
  if (s == "all") return SplitSide::all;
  if (s == "train") return SplitSide::train;
  if (s == "test") return SplitSide::test;
  return std::nullopt;
}

std::vector<TrainingRecord> select_records(const Corpus& corpus, const CorpusSplit& split,
                                           SplitSide side) {
  std::vector<TrainingRecord> out;
  for (const auto& r : corpus.records) {
    bool held = split.is_heldout(r.encounter_id);
    if (side == SplitSide::all || (side == SplitSide::test) == held) out.push_back(r);
  }
  return out;
}

CandidatePools candidate_pools(const Corpus& corpus) {
  CandidatePools pools;
  for (const auto& e : corpus.encounters)
    pools[e.encounter_id] =
        std::unordered_set<std::string>(e.candidate_order_ids.begin(), e.candidate_order_ids.end());
  return pools;
}

}  // namespace orderlens
