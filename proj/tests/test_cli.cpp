#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "support.hpp"

namespace fs = std::filesystem;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(const TempDir& dir, const std::string& args, const std::string& stdin_text = "") {
  const auto out = dir.path / "stdout.txt";
  const auto err = dir.path / "stderr.txt";
  const auto in = dir.path / "stdin.txt";
  std::ofstream(in) << stdin_text;
  std::string cmd = std::string("cd '") + dir.path.string() + "' && '" + ORDERLENS_BIN + "' " + args +
                    " < '" + in.string() + "' > '" + out.string() + "' 2> '" + err.string() + "'";
  int status = std::system(cmd.c_str());
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(out), slurp(err)};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(line);
  return out;
}

const std::string kSmallModel = " --dim 32 --buckets 4096 --epochs 2 --batch-size 16";

// gen-data -> train -> build-index into `sub`.
void small_pipeline(const TempDir& dir, const std::string& sub) {
  REQUIRE(run(dir, "gen-data --seed 7 --orders 30 --encounters 20 --out-dir " + sub + "/data").code == 0);
  REQUIRE(run(dir, "train --data " + sub + "/data --out " + sub + "/model.ckpt" + kSmallModel).code == 0);
  REQUIRE(run(dir, "build-index --orders " + sub + "/data/orders.jsonl --checkpoint " + sub +
                       "/model.ckpt --out " + sub + "/index.bin")
              .code == 0);
}

}  // namespace

TEST_CASE("every subcommand echoes its resolved config as JSON on stderr") {
  TempDir dir;
  auto r = run(dir, "gen-data --orders 10 --encounters 4 --out-dir data");
  REQUIRE(r.code == 0);
  auto first = lines(r.err).front();
  auto j = nlohmann::json::parse(first);
  CHECK(j["subcommand"] == "gen-data");
  CHECK(j["config"]["orders"] == 10);
  CHECK(j["config"]["seed"] == 7);
  CHECK(fs::exists(dir.path / "data" / "orders.jsonl"));
  CHECK(fs::exists(dir.path / "data" / "encounters.jsonl"));
  CHECK(fs::exists(dir.path / "data" / "records.jsonl"));
}

TEST_CASE("gen-data is byte-deterministic") {
  TempDir dir;
  REQUIRE(run(dir, "gen-data --orders 10 --encounters 5 --out-dir a").code == 0);
  REQUIRE(run(dir, "gen-data --orders 10 --encounters 5 --out-dir b").code == 0);
  for (const char* f : {"orders.jsonl", "encounters.jsonl", "records.jsonl"})
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
}

TEST_CASE("unknown flags and bad values are rejected with one error line") {
  TempDir dir;
  auto r = run(dir, "gen-data --out-dir x --bogus 3");
  CHECK(r.code != 0);
  REQUIRE(lines(r.err).size() == 1);
  CHECK(r.err.starts_with("error: usage: "));

  r = run(dir, "eval --data d --index i --checkpoint c --out o --view sideways");
  CHECK(r.code != 0);
  CHECK(r.err.starts_with("error: usage: "));

  r = run(dir, "frobnicate");
  CHECK(r.code != 0);
}

TEST_CASE("runtime failures exit nonzero with a machine-parseable line") {
  TempDir dir;
  auto r = run(dir, "search --index missing.bin --checkpoint missing.ckpt --query x");
  CHECK(r.code != 0);
  auto ls = lines(r.err);
  REQUIRE(ls.size() == 2);  // config echo, then the error
  CHECK(ls.back().starts_with("error: io: "));

  REQUIRE(run(dir, "gen-data --orders 10 --encounters 4 --out-dir data").code == 0);
  std::ofstream(dir.path / "data" / "records.jsonl", std::ios::app) << "{\"record_id\": 5}\n";
  r = run(dir, "train --data data --out m.ckpt" + kSmallModel);
  CHECK(r.code != 0);
  CHECK(lines(r.err).back().starts_with("error: ingestion: "));

  r = run(dir, "train --data data --out m.ckpt --variants Bogus" + kSmallModel);
  CHECK(r.code != 0);
  CHECK(lines(r.err).back().starts_with("error: "));
}

TEST_CASE("search clamps k to the index size") {
  TempDir dir;
  small_pipeline(dir, "p");
  std::ofstream(dir.path / "two.jsonl")
      << "{\"order_id\":\"a\",\"canonical_text\":\"Chest X ray, 2 views\",\"category\":\"imaging\"}\n"
      << "{\"order_id\":\"b\",\"canonical_text\":\"Urinalysis\",\"category\":\"lab\"}\n";
  REQUIRE(run(dir, "build-index --orders two.jsonl --checkpoint p/model.ckpt --out two.bin").code == 0);
  auto r = run(dir, "search --index two.bin --checkpoint p/model.ckpt --query 'chest x ray' --k 3");
  REQUIRE(r.code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["results"].size() == 2);
  CHECK(j["results"][0]["order_id"] == "a");
}

TEST_CASE("filtered equals strict on the unified corpus") {
  TempDir dir;
  small_pipeline(dir, "p");
  const std::string common = "eval --data p/data --index p/index.bin --checkpoint p/model.ckpt --split all";
  REQUIRE(run(dir, common + " --view strict --out s.json").code == 0);
  REQUIRE(run(dir, common + " --view filtered --out f.json").code == 0);
  auto s = nlohmann::json::parse(slurp(dir.path / "s.json"));
  auto f = nlohmann::json::parse(slurp(dir.path / "f.json"));
  CHECK(s["overall"] == f["overall"]);
  CHECK(s["by_variant"] == f["by_variant"]);

  REQUIRE(run(dir, common + " --mode encounter_scoped --view filtered --out sf.json").code == 0);
  auto sf = nlohmann::json::parse(slurp(dir.path / "sf.json"));
  CHECK(sf["n_with_reference"].get<int>() <= sf["n_total"].get<int>());
}

TEST_CASE("pipeline twice gives byte-identical reports") {
  TempDir dir;
  small_pipeline(dir, "a");
  small_pipeline(dir, "b");
  CHECK(slurp(dir.path / "a/model.ckpt") == slurp(dir.path / "b/model.ckpt"));
  CHECK(slurp(dir.path / "a/index.bin") == slurp(dir.path / "b/index.bin"));
  for (const char* tag : {"a", "b"}) {
    std::string t = tag;
    REQUIRE(run(dir, "eval --data " + t + "/data --index " + t + "/index.bin --checkpoint " + t +
                         "/model.ckpt --out " + t + "/eval.json")
                .code == 0);
    REQUIRE(run(dir, "geometry --data " + t + "/data --index " + t + "/index.bin --checkpoint " + t +
                         "/model.ckpt --out " + t + "/geometry.json")
                .code == 0);
  }
  CHECK(slurp(dir.path / "a/eval.json") == slurp(dir.path / "b/eval.json"));
  CHECK(slurp(dir.path / "a/geometry.json") == slurp(dir.path / "b/geometry.json"));
  auto g = nlohmann::json::parse(slurp(dir.path / "a/geometry.json"));
  for (const char* key : {"margin_mean", "margin_pos_frac", "compactness_mean", "separation_mean",
                          "fisher_ratio", "silhouette_cosine", "n_queries", "n_orders"})
    CHECK(g.contains(key));
  auto report = nlohmann::json::parse(slurp(dir.path / "a/train-report.json"));
  CHECK(report["loss_trace"].size() == report["steps_total"]);
  CHECK(report.contains("wall_clock_seconds"));
}

TEST_CASE("session streams one JSON object per retrigger") {
  TempDir dir;
  small_pipeline(dir, "p");
  const std::string input =
      "patient\tI have had burning when I pee\n"
      "provider\tLet us check your urine\n"
      "patient\tAlso my knee hurts\n";
  auto r = run(dir, "session --index p/index.bin --checkpoint p/model.ckpt --k 3", input);
  REQUIRE(r.code == 0);
  auto out = lines(r.out);
  REQUIRE(out.size() == 3);
  auto last = nlohmann::json::parse(out.back());
  CHECK(last["turn"] == 2);
  CHECK(last["window_turns"] == 3);
  CHECK(last["results"].size() == 3);

  r = run(dir, "session --index p/index.bin --checkpoint p/model.ckpt --retrigger on_provider_turn", input);
  REQUIRE(r.code == 0);
  CHECK(lines(r.out).size() == 1);

  r = run(dir, "session --index p/index.bin --checkpoint p/model.ckpt --min-score 2", input);
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(lines(r.out).front())["results"].empty());

  r = run(dir, "session --index p/index.bin --checkpoint p/model.ckpt", "no tab here\n");
  CHECK(r.code != 0);
  CHECK(lines(r.err).back().starts_with("error: format: "));
}

TEST_CASE("export writes one TSV row per query and order") {
  TempDir dir;
  small_pipeline(dir, "p");
  REQUIRE(run(dir, "export --data p/data --checkpoint p/model.ckpt --out p/emb.tsv").code == 0);
  auto rows = lines(slurp(dir.path / "p/emb.tsv"));
  std::size_t records = lines(slurp(dir.path / "p/data/records.jsonl")).size();
  CHECK(rows.size() == 1 + records * 4 + 30);
  CHECK(rows.front().starts_with("id\tkind\tvariant\tgold_order_id\td0"));
}

TEST_CASE("paper preset and scale sweep flags") {
  TempDir dir;
  REQUIRE(run(dir, "gen-data --orders 30 --encounters 20 --out-dir data").code == 0);
  auto r = run(dir, "train --data data --out m.ckpt --preset paper" + kSmallModel);
  REQUIRE(r.code == 0);
  CHECK(nlohmann::json::parse(lines(r.err).front())["config"]["lr"] == 2e-5);
  for (const char* s : {"10", "20", "100"}) {
    r = run(dir, std::string("train --data data --out s") + s + ".ckpt --report s" + s + ".json --scale " + s +
                     kSmallModel);
    CHECK(r.code == 0);
    auto rep = nlohmann::json::parse(slurp(dir.path / (std::string("s") + s + ".json")));
    CHECK(rep["config"]["scale"] == std::stod(s));
  }
}
