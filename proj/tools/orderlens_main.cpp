#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "orderlens/corpus.hpp"
#include "orderlens/encoder.hpp"
#include "orderlens/evaluation.hpp"
#include "orderlens/generator.hpp"
#include "orderlens/geometry.hpp"
#include "orderlens/index.hpp"
#include "orderlens/session.hpp"
#include "orderlens/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace orderlens;

namespace {

void echo_config(const std::string& subcommand, ordered_json flags) {
  ordered_json j;
  j["subcommand"] = subcommand;
  j["config"] = std::move(flags);
  std::cerr << j.dump() << "\n";
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<Variant> parse_variant_list(const std::string& s) {
  std::vector<Variant> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = parse_variant(item);
    if (!v) throw ConfigError("unknown variant '" + item + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw ConfigError("--variants must name at least one variant");
  return out;
}

std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      long long k = std::stoll(item, &used);
      if (used != item.size() || k < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(k));
    } catch (const std::exception&) {
      throw ConfigError("--ks entries must be positive integers, got '" + item + "'");
    }
  }
  return out;
}

// Query selection shared by train, eval, geometry and export.
struct DataOptions {
  std::string data_dir;
  std::string split = "all";
  double holdout = 0.1;
  double min_confidence = 0.0;

  void add_to(CLI::App* app, const std::string& default_split) {
    split = default_split;
    app->add_option("--data", data_dir, "Corpus directory (orders/encounters/records.jsonl)")->required();
    app->add_option("--split", split, "Which side of the encounter split to use")
        ->check(CLI::IsMember({"all", "train", "test"}));
    app->add_option("--holdout", holdout, "Fraction of encounters held out as the test side")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--min-confidence", min_confidence, "Drop records below this confidence")
        ->check(CLI::Range(0.0, 1.0));
  }

  void echo(ordered_json& j) const {
    j["data"] = data_dir;
    j["split"] = split;
    j["holdout"] = holdout;
    j["min_confidence"] = min_confidence;
  }

  Corpus load() const { return load_corpus(CorpusPaths::in_directory(data_dir), {min_confidence}); }

  std::vector<QueryInstance> queries(const Corpus& corpus) const {
    auto side = *parse_split_side(split);
    auto records = select_records(corpus, split_by_encounter(corpus, holdout), side);
    return expand_all(records);
  }
};

Checkpoint load_model(const std::string& path) { return load_checkpoint(path); }

void check_index_matches(const VectorIndex& index, const EncoderConfig& encoder) {
  if (index.dim() != encoder.dim)
    throw ConfigError("index dim " + std::to_string(index.dim()) + " does not match checkpoint dim " +
                      std::to_string(encoder.dim));
}

ordered_json ranked_json(const RetrievalResult& r, double min_score) {
  auto arr = ordered_json::array();
  for (const auto& s : r.ranked) {
    if (s.score < min_score) continue;
    ordered_json e;
    e["order_id"] = s.order_id;
    e["score"] = round_sig9(s.score);
    arr.push_back(std::move(e));
  }
  return arr;
}

int run(int argc, char** argv) {
  CLI::App app{"Dense retrieval of clinical orders from commands and conversation"};
  app.require_subcommand(1);

  // gen-data
  GeneratorConfig gen;
  std::string gen_out;
  std::string gen_preset = "default";
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  gen_cmd->add_option("--out-dir", gen_out, "Output directory")->required();
  gen_cmd->add_option("--preset", gen_preset, "default, or acceptance (200 encounters x 4 orders)")
      ->check(CLI::IsMember({"default", "acceptance"}));
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--orders", gen.n_orders);
  gen_cmd->add_option("--encounters", gen.n_encounters);
  gen_cmd->add_option("--min-orders-per-encounter", gen.orders_per_encounter.min);
  gen_cmd->add_option("--max-orders-per-encounter", gen.orders_per_encounter.max);
  gen_cmd->add_option("--min-distractors", gen.distractor_turns.min);
  gen_cmd->add_option("--max-distractors", gen.distractor_turns.max);
  gen_cmd->add_option("--confusables", gen.confusables_per_order);
  gen_cmd->add_option("--missing-gold", gen.missing_gold_fraction)->check(CLI::Range(0.0, 1.0));

  // train
  DataOptions train_data;
  TrainConfig tc;
  EncoderConfig train_enc;
  std::string train_out, train_report, train_variants = "all", train_optimizer = "adam_like",
                                        train_preset = "default";
  auto* train_cmd = app.add_subcommand("train", "Fine-tune the encoder");
  train_data.add_to(train_cmd, "train");
  train_cmd->add_option("--out", train_out, "Checkpoint path")->required();
  train_cmd->add_option("--report", train_report, "Train report path (default: train-report.json next to --out)");
  train_cmd->add_option("--preset", train_preset, "default, or paper (learning rate 2e-5)")
      ->check(CLI::IsMember({"default", "paper"}));
  auto* lr_opt = train_cmd->add_option("--lr", tc.learning_rate);
  train_cmd->add_option("--epochs", tc.epochs);
  train_cmd->add_option("--batch-size", tc.batch_size);
  train_cmd->add_option("--warmup", tc.warmup_ratio);
  train_cmd->add_option("--scale", tc.scale);
  train_cmd->add_option("--seed", tc.seed);
  train_cmd->add_option("--variants", train_variants, "all, or comma-separated variant names");
  train_cmd->add_option("--optimizer", train_optimizer)->check(CLI::IsMember({"adam_like", "sgd_momentum"}));
  train_cmd->add_option("--weight-decay", tc.weight_decay);
  train_cmd->add_option("--momentum", tc.momentum);
  train_cmd->add_option("--dim", train_enc.dim);
  train_cmd->add_option("--buckets", train_enc.n_buckets);
  train_cmd->add_option("--max-tokens", train_enc.max_tokens);
  train_cmd->add_option("--hash-seed", train_enc.hash_seed);

  // build-index
  std::string bi_orders, bi_ckpt, bi_out;
  auto* bi_cmd = app.add_subcommand("build-index", "Embed every order into an index file");
  bi_cmd->add_option("--orders", bi_orders, "orders.jsonl, or a corpus directory")->required();
  bi_cmd->add_option("--checkpoint", bi_ckpt)->required();
  bi_cmd->add_option("--out", bi_out)->required();

  // search
  std::string s_index, s_ckpt, s_query;
  std::size_t s_k = 5;
  double s_min_score = -2.0;
  auto* s_cmd = app.add_subcommand("search", "Rank orders for one query");
  s_cmd->add_option("--index", s_index)->required();
  s_cmd->add_option("--checkpoint", s_ckpt)->required();
  s_cmd->add_option("--query", s_query)->required();
  s_cmd->add_option("--k", s_k)->check(CLI::PositiveNumber);
  s_cmd->add_option("--min-score", s_min_score, "Hide results scoring below this");

  // session
  std::string ss_index, ss_ckpt, ss_retrigger = "every_turn";
  SessionConfig sc;
  double ss_min_score = -2.0;
  auto* ss_cmd = app.add_subcommand("session", "Stream speaker<TAB>text turns from stdin");
  ss_cmd->add_option("--index", ss_index)->required();
  ss_cmd->add_option("--checkpoint", ss_ckpt)->required();
  ss_cmd->add_option("--window-turns", sc.window_turns)->check(CLI::PositiveNumber);
  ss_cmd->add_option("--k", sc.top_k)->check(CLI::PositiveNumber);
  ss_cmd->add_option("--retrigger", ss_retrigger)->check(CLI::IsMember({"every_turn", "on_provider_turn"}));
  ss_cmd->add_option("--min-score", ss_min_score, "Hide results scoring below this");

  // eval
  DataOptions eval_data;
  std::string ev_index, ev_ckpt, ev_out, ev_mode = "unified_corpus", ev_view = "strict",
                                         ev_ks = "1,5,10,20";
  auto* ev_cmd = app.add_subcommand("eval", "Recall@K and MRR@K over held-out queries");
  eval_data.add_to(ev_cmd, "test");
  ev_cmd->add_option("--index", ev_index)->required();
  ev_cmd->add_option("--checkpoint", ev_ckpt)->required();
  ev_cmd->add_option("--out", ev_out)->required();
  ev_cmd->add_option("--mode", ev_mode)->check(CLI::IsMember({"unified_corpus", "encounter_scoped"}));
  ev_cmd->add_option("--view", ev_view)->check(CLI::IsMember({"strict", "filtered"}));
  ev_cmd->add_option("--ks", ev_ks, "Comma-separated cutoffs");

  // geometry
  DataOptions geo_data;
  std::string g_index, g_ckpt, g_out;
  auto* g_cmd = app.add_subcommand("geometry", "Embedding-structure diagnostics");
  geo_data.add_to(g_cmd, "test");
  g_cmd->add_option("--index", g_index)->required();
  g_cmd->add_option("--checkpoint", g_ckpt)->required();
  g_cmd->add_option("--out", g_out)->required();

  // export
  DataOptions ex_data;
  std::string x_ckpt, x_out;
  auto* x_cmd = app.add_subcommand("export", "Write query and order embeddings as TSV");
  ex_data.add_to(x_cmd, "all");
  x_cmd->add_option("--checkpoint", x_ckpt)->required();
  x_cmd->add_option("--out", x_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  if (*gen_cmd) {
    if (gen_preset == "acceptance") {
      auto seed = gen.seed;
      gen = acceptance_corpus_config();
      gen.seed = seed;
    }
    ordered_json j;
    j["out_dir"] = gen_out;
    j["preset"] = gen_preset;
    j["seed"] = gen.seed;
    j["orders"] = gen.n_orders;
    j["encounters"] = gen.n_encounters;
    j["orders_per_encounter"] = {gen.orders_per_encounter.min, gen.orders_per_encounter.max};
    j["distractor_turns"] = {gen.distractor_turns.min, gen.distractor_turns.max};
    j["confusables"] = gen.confusables_per_order;
    j["missing_gold"] = gen.missing_gold_fraction;
    echo_config("gen-data", j);
    Corpus corpus = generate_corpus(gen);
    fs::create_directories(gen_out);
    save_corpus(corpus, CorpusPaths::in_directory(gen_out));
    std::cerr << "wrote " << corpus.orders.size() << " orders, " << corpus.encounters.size()
              << " encounters, " << corpus.records.size() << " records to " << gen_out << "\n";
    return 0;
  }

  if (*train_cmd) {
    if (train_preset == "paper") {
      TrainConfig preset = TrainConfig::paper_preset();
      if (lr_opt->count() == 0) tc.learning_rate = preset.learning_rate;
    }
    tc.optimizer = *parse_optimizer(train_optimizer);
    if (train_variants != "all") tc.variant_filter = parse_variant_list(train_variants);
    if (train_report.empty()) train_report = (fs::path(train_out).parent_path() / "train-report.json").string();
    train_enc.validate();
    tc.validate();

    ordered_json j;
    train_data.echo(j);
    j["out"] = train_out;
    j["report"] = train_report;
    j["preset"] = train_preset;
    j["epochs"] = tc.epochs;
    j["batch_size"] = tc.batch_size;
    j["lr"] = tc.learning_rate;
    j["warmup"] = tc.warmup_ratio;
    j["scale"] = tc.scale;
    j["seed"] = tc.seed;
    j["variants"] = train_variants;
    j["optimizer"] = train_optimizer;
    j["weight_decay"] = tc.weight_decay;
    j["momentum"] = tc.momentum;
    j["dim"] = train_enc.dim;
    j["buckets"] = train_enc.n_buckets;
    j["max_tokens"] = train_enc.max_tokens;
    j["hash_seed"] = train_enc.hash_seed;
    echo_config("train", j);

    Corpus corpus = train_data.load();
    auto queries = train_data.queries(corpus);
    auto result = train(queries, corpus.orders, train_enc, random_params(train_enc, tc.seed), tc);
    if (fs::path(train_out).has_parent_path()) fs::create_directories(fs::path(train_out).parent_path());
    save_checkpoint(train_out, result.params, train_enc);
    result.report.checkpoint_path = train_out;
    write_text(train_report, train_report_json(result.report));
    std::cerr << "trained " << result.report.steps_total << " steps in "
              << result.report.wall_clock_seconds << " s; final epoch loss "
              << result.report.epoch_mean_loss.back() << "\n";
    return 0;
  }

  if (*bi_cmd) {
    ordered_json j;
    j["orders"] = bi_orders;
    j["checkpoint"] = bi_ckpt;
    j["out"] = bi_out;
    echo_config("build-index", j);
    fs::path orders_path = bi_orders;
    if (fs::is_directory(orders_path)) orders_path /= "orders.jsonl";
    auto orders = load_orders(orders_path);
    auto model = load_model(bi_ckpt);
    auto index = build_index(orders, model.params, model.config);
    if (fs::path(bi_out).has_parent_path()) fs::create_directories(fs::path(bi_out).parent_path());
    save_index(bi_out, index);
    return 0;
  }

  if (*s_cmd) {
    ordered_json j;
    j["index"] = s_index;
    j["checkpoint"] = s_ckpt;
    j["query"] = s_query;
    j["k"] = s_k;
    j["min_score"] = s_min_score;
    echo_config("search", j);
    auto model = load_model(s_ckpt);
    auto index = load_index(s_index);
    check_index_matches(index, model.config);
    auto result = search(encode(s_query, model.params, model.config), index, s_k);
    ordered_json out;
    out["query"] = s_query;
    out["results"] = ranked_json(result, s_min_score);
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  if (*ss_cmd) {
    sc.retrigger = *parse_retrigger(ss_retrigger);
    sc.validate();
    ordered_json j;
    j["index"] = ss_index;
    j["checkpoint"] = ss_ckpt;
    j["window_turns"] = sc.window_turns;
    j["k"] = sc.top_k;
    j["retrigger"] = ss_retrigger;
    j["min_score"] = ss_min_score;
    echo_config("session", j);
    auto model = load_model(ss_ckpt);
    auto index = load_index(ss_index);
    check_index_matches(index, model.config);

    SessionState state(sc.window_turns);
    std::string line;
    std::uint32_t next_index = 0;
    std::size_t line_no = 0;
    while (std::getline(std::cin, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos)
        throw FormatError("stdin line " + std::to_string(line_no) + ": expected speaker<TAB>text");
      auto speaker = parse_speaker(line.substr(0, tab));
      if (!speaker)
        throw FormatError("stdin line " + std::to_string(line_no) + ": unknown speaker '" +
                          line.substr(0, tab) + "'");
      TranscriptChunk chunk{next_index++, *speaker, line.substr(tab + 1)};
      state.push_turn(chunk);
      if (!should_retrigger(sc, chunk)) continue;
      auto result = retrieve_now(state, index, model.params, model.config, sc);
      ordered_json out;
      out["turn"] = chunk.index;
      out["speaker"] = to_string(chunk.speaker);
      out["window_turns"] = state.buffer().size();
      out["results"] = ranked_json(result, ss_min_score);
      std::cout << out.dump() << "\n" << std::flush;
    }
    return 0;
  }

  if (*ev_cmd) {
    EvalConfig cfg;
    cfg.ks = parse_ks(ev_ks);
    cfg.mode = *parse_eval_mode(ev_mode);
    cfg.view = *parse_eval_view(ev_view);
    cfg.validate();
    ordered_json j;
    eval_data.echo(j);
    j["index"] = ev_index;
    j["checkpoint"] = ev_ckpt;
    j["out"] = ev_out;
    j["mode"] = ev_mode;
    j["view"] = ev_view;
    j["ks"] = cfg.ks;
    echo_config("eval", j);
    Corpus corpus = eval_data.load();
    auto queries = eval_data.queries(corpus);
    auto model = load_model(ev_ckpt);
    auto index = load_index(ev_index);
    check_index_matches(index, model.config);
    CandidatePools pools;
    if (cfg.mode == EvalMode::encounter_scoped) pools = candidate_pools(corpus);
    auto report = evaluate(queries, index, model.params, model.config, cfg,
                           cfg.mode == EvalMode::encounter_scoped ? &pools : nullptr);
    write_text(ev_out, eval_report_json(report));
    return 0;
  }

  if (*g_cmd) {
    ordered_json j;
    geo_data.echo(j);
    j["index"] = g_index;
    j["checkpoint"] = g_ckpt;
    j["out"] = g_out;
    echo_config("geometry", j);
    Corpus corpus = geo_data.load();
    auto queries = geo_data.queries(corpus);
    if (queries.empty()) throw ConfigError("no queries selected for geometry");
    auto model = load_model(g_ckpt);
    auto index = load_index(g_index);
    check_index_matches(index, model.config);
    Matrix embedded = encode_queries(queries, model.params, model.config);
    std::vector<std::string> gold;
    for (const auto& q : queries) gold.push_back(q.gold_order_id);
    auto report = compute_geometry(embedded, gold, index);

    auto out = ordered_json::parse(geometry_report_json(report));
    ordered_json by_variant;
    auto spread = mean_one_minus_cosine_by_variant(queries, index, model.params, model.config);
    for (auto v : kAllVariants) {
      const auto& x = spread[static_cast<std::size_t>(v)];
      by_variant[std::string(to_string(v))] = x ? ordered_json(round_sig9(*x)) : ordered_json(nullptr);
    }
    out["mean_one_minus_cosine_by_variant"] = std::move(by_variant);
    write_text(g_out, out.dump(2) + "\n");
    return 0;
  }

  if (*x_cmd) {
    ordered_json j;
    ex_data.echo(j);
    j["checkpoint"] = x_ckpt;
    j["out"] = x_out;
    echo_config("export", j);
    Corpus corpus = ex_data.load();
    auto queries = ex_data.queries(corpus);
    auto model = load_model(x_ckpt);
    auto out = open_out(x_out);
    export_embeddings(out, queries, corpus.orders, model.params, model.config);
    if (!out) throw IoError("failed writing " + x_out);
    return 0;
  }
  return 2;
}

std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << one_line(e.what()) << "\n";
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: io: " << one_line(e.what()) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << "\n";
  }
  return 1;
}
