#include <doctest.h>

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eigenspine/annotation.hpp"
#include "eigenspine/cli.hpp"
#include "eigenspine/error.hpp"
#include "eigenspine/lra.hpp"
#include "support.hpp"

using namespace eigenspine;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "eigenspine");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// One small corpus shared by every case in this file.
const fs::path& corpus_dir() {
  static const fs::path dir = [] {
    auto d = fixture::temp_dir("cli") / "corpus";
    const auto r = run({"synth", "--out", d.string(), "--n-seed", "10", "--n-pool", "16",
                        "--seed", "5", "--memorized-fraction", "0.1"});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

fs::path scratch(const std::string& name) {
  auto d = corpus_dir().parent_path() / name;
  fs::remove_all(d);
  return d;
}

void check_json_error(const std::string& err, const std::string& code) {
  const auto line = err.substr(0, err.find('\n'));
  const auto j = nlohmann::json::parse(line);
  CHECK(j["error"] == code);
  CHECK(j["message"].is_string());
}

}  // namespace

TEST_CASE("config documents") {
  std::istringstream in(
      "# engine settings\n"
      "tau_c = 0.4\n"
      "selection_mode = \"independent\"  # trailing comment\n"
      "\n"
      "  top_k=5\n");
  const auto kv = cli::parse_config(in);
  CHECK(kv.at("tau_c") == "0.4");
  CHECK(kv.at("selection_mode") == "independent");
  CHECK(kv.at("top_k") == "5");

  std::istringstream dup("a = 1\na = 2\n");
  CHECK_THROWS_AS(cli::parse_config(dup), Error);
  std::istringstream junk("just words\n");
  CHECK_THROWS_AS(cli::parse_config(junk), Error);
}

TEST_CASE("exit code mapping") {
  CHECK(cli::exit_code_for(ErrorCode::kRankDeficient) == 3);
  CHECK(cli::exit_code_for(ErrorCode::kBlockedOnReview) == 4);
  CHECK(cli::exit_code_for(ErrorCode::kParse) == 2);
  CHECK(cli::exit_code_for(ErrorCode::kIdMismatch) == 2);
  CHECK(cli::exit_code_for(ErrorCode::kNoPredictor) == 1);
}

TEST_CASE("usage errors") {
  auto r = run({"no-such-command"});
  CHECK(r.code == 2);
  check_json_error(r.err, "Usage");
  r = run({"fit-basis"});
  CHECK(r.code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("synth writes the corpus layout") {
  const auto& d = corpus_dir();
  CHECK(fs::exists(d / "seed.jsonl"));
  CHECK(fs::exists(d / "pool.jsonl"));
  CHECK(fs::exists(d / "corpus.json"));
  CHECK(fs::exists(d / "seed" / "seed_0000.png"));
  const auto pool = read_annotations(d / "pool.jsonl");
  CHECK(pool.size() == 16);
  CHECK(pool[0].sample.instances.size() == 17);
  CHECK(pool[0].cobb.has_value());
}

TEST_CASE("fit-basis") {
  const auto d = scratch("fit");
  fs::create_directories(d);
  auto r = run({"fit-basis", "--annotations", (corpus_dir() / "seed.jsonl").string(), "--m", "16",
                "--out", (d / "basis.json").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("singular values") != std::string::npos);
  const auto basis = load_basis(d / "basis.json");
  CHECK(basis.dim() == 28);
  CHECK(basis.m() == 16);

  r = run({"fit-basis", "--annotations", (corpus_dir() / "seed.jsonl").string(), "--m", "0"});
  CHECK(r.code == 2);

  // Every sample repeats one contour, so the matrix has rank 1.
  AnnotationRecord rec;
  rec.sample.sample_id = "dup";
  rec.sample.instances = {{fixture::rect(100, 100, 40, 20), 1.0, 0},
                          {fixture::rect(100, 100, 40, 20), 1.0, 1}};
  write_annotations(d / "dup.jsonl", std::vector{rec});
  r = run({"fit-basis", "--annotations", (d / "dup.jsonl").string(), "--m", "2", "--out",
           (d / "b2.json").string()});
  CHECK(r.code == 3);
  check_json_error(r.err, "RankDeficient");

  std::ofstream(d / "bad.jsonl") << "{\"sample_id\": 3}\n";
  r = run({"fit-basis", "--annotations", (d / "bad.jsonl").string(), "--out",
           (d / "b3.json").string()});
  CHECK(r.code == 2);
  check_json_error(r.err, "Parse");
}

TEST_CASE("cobb") {
  const auto pool = (corpus_dir() / "pool.jsonl").string();
  auto r = run({"cobb", "--annotations", pool, "--reference", pool});
  CHECK(r.code == 0);
  CHECK(r.out.find("smape 0.00%") != std::string::npos);
  const auto first = nlohmann::json::parse(r.out.substr(0, r.out.find('\n')));
  CHECK(first.contains("sample_id"));
  CHECK(first["cobb"].contains("max"));

  // Measured angles track the generator's analytic truth.
  double total = 0;
  const auto records = read_annotations(corpus_dir() / "pool.jsonl");
  for (const auto& rec : records)
    total += std::abs(cobb_report(rec.sample).max_deg - rec.cobb->max_deg);
  CHECK(total / records.size() <= 2.0);

  const auto d = scratch("cobb");
  fs::create_directories(d);
  auto partial = records;
  partial.erase(partial.begin() + 3);
  write_annotations(d / "ref.jsonl", partial);
  r = run({"cobb", "--annotations", pool, "--reference", (d / "ref.jsonl").string()});
  CHECK(r.code == 2);
  check_json_error(r.err, "IdMismatch");
  CHECK(r.err.find(records[3].sample.sample_id) != std::string::npos);
}

TEST_CASE("privacy-scan") {
  const auto seed = (corpus_dir() / "seed").string();
  const auto d = scratch("privacy");
  fs::create_directories(d / "empty");
  auto r = run({"privacy-scan", "--candidates", seed, "--references", seed, "--out",
                (d / "audit.csv").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("rejected 10 of 10") != std::string::npos);
  const auto csv = slurp(d / "audit.csv");
  CHECK(csv.rfind("new_image,top1_image", 0) == 0);

  fs::create_directories(d / "noise");
  for (int i = 0; i < 3; ++i)
    write_png(d / "noise" / ("n" + std::to_string(i) + ".png"),
              fixture::noise_image(512, 512, 50 + i));
  r = run({"privacy-scan", "--candidates", (d / "noise").string(), "--references", seed});
  CHECK(r.code == 0);
  CHECK(r.err.find("rejected 0 of 3") != std::string::npos);

  r = run({"privacy-scan", "--candidates", seed, "--references", (d / "empty").string()});
  CHECK(r.code == 2);
  check_json_error(r.err, "EmptyReferenceSet");
}

TEST_CASE("engine outputs are deterministic") {
  const auto a = scratch("engine_a"), b = scratch("engine_b");
  const std::vector<std::string> common{"engine", "--seed-set",
                                        (corpus_dir() / "seed.jsonl").string(), "--pool",
                                        (corpus_dir() / "pool.jsonl").string(),
                                        "--selection", "cumulative", "--tau-c", "0.3",
                                        "--lambda-ss", "0.8", "--lambda-ps", "0.2"};
  auto args_a = common, args_b = common;
  args_a.insert(args_a.end(), {"--out", a.string()});
  args_b.insert(args_b.end(), {"--out", b.string()});
  REQUIRE(run(args_a).code == 0);
  REQUIRE(run(args_b).code == 0);

  for (const char* f : {"ledger.jsonl", "metrics.csv", "snapshot_000.jsonl", "snapshot_001.jsonl",
                        "privacy_audit.csv", "review_queue.json"}) {
    CHECK(fs::exists(a / f));
    CHECK(slurp(a / f) == slurp(b / f));
  }
  CHECK(fs::exists(a / "run.log"));
  CHECK(slurp(a / "snapshot_000.jsonl").empty());

  std::istringstream metrics(slurp(a / "metrics.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(metrics, line)) ++rows;
  CHECK(rows >= 1);
  CHECK(rows <= 6);

  // Memorized copies of seed images never reach a snapshot.
  const auto corpus = nlohmann::json::parse(slurp(corpus_dir() / "corpus.json"));
  CHECK(corpus["memorized"].size() > 0);
  const auto snap = read_annotations(a / ("snapshot_00" + std::to_string(rows) + ".jsonl"));
  CHECK(snap.size() > 0);
  for (const auto& [id, src] : corpus["memorized"].items())
    for (const auto& rec : snap) CHECK(rec.sample.sample_id != id);
}

TEST_CASE("engine with no iterations") {
  const auto d = scratch("engine_zero");
  auto r = run({"engine", "--seed-set", (corpus_dir() / "seed.jsonl").string(), "--pool",
                (corpus_dir() / "pool.jsonl").string(), "--out", d.string(), "--max-iterations",
                "0"});
  CHECK(r.code == 0);
  CHECK(fs::exists(d / "snapshot_000.jsonl"));
  CHECK_FALSE(fs::exists(d / "snapshot_001.jsonl"));
}

TEST_CASE("engine no_filter accepts all but privacy rejections") {
  const auto d = scratch("engine_nf");
  auto r = run({"engine", "--seed-set", (corpus_dir() / "seed.jsonl").string(), "--pool",
                (corpus_dir() / "pool.jsonl").string(), "--out", d.string(), "--selection",
                "no_filter"});
  REQUIRE(r.code == 0);
  std::istringstream ledger(slurp(d / "ledger.jsonl"));
  std::string line;
  while (std::getline(ledger, line)) {
    const auto j = nlohmann::json::parse(line);
    if (j["v"] == 0) CHECK(j["reasons"] == nlohmann::json{"PRIVACY"});
  }
}

TEST_CASE("engine config file and flag precedence") {
  const auto d = scratch("engine_cfg");
  fs::create_directories(d.parent_path());
  const auto cfg = d.parent_path() / "engine_cfg.conf";
  std::ofstream(cfg) << "tau_c = 0.5\nselection_mode = independent\nmax_iterations = 1\n";
  auto r = run({"engine", "--seed-set", (corpus_dir() / "seed.jsonl").string(), "--pool",
                (corpus_dir() / "pool.jsonl").string(), "--out", d.string(), "--config",
                cfg.string(), "--tau-c", "0.2"});
  REQUIRE(r.code == 0);
  const auto log = slurp(d / "run.log");
  CHECK(log.find("selection=independent") != std::string::npos);
  CHECK(log.find("tau_c=0.2") != std::string::npos);
  CHECK(fs::exists(d / "snapshot_001.jsonl"));
  CHECK_FALSE(fs::exists(d / "snapshot_002.jsonl"));

  std::ofstream(cfg) << "tau_c = 0.5\nnot_a_key = 1\n";
  r = run({"engine", "--seed-set", (corpus_dir() / "seed.jsonl").string(), "--pool",
           (corpus_dir() / "pool.jsonl").string(), "--out", d.string(), "--config", cfg.string()});
  CHECK(r.code == 2);
}

TEST_CASE("strict engine blocks with exit 4") {
  const auto d = scratch("engine_strict");
  // A threshold of 0.999 leaves too few vertebrae, so every sample needs review.
  auto r = run({"engine", "--seed-set", (corpus_dir() / "seed.jsonl").string(), "--pool",
                (corpus_dir() / "pool.jsonl").string(), "--out", d.string(), "--strict",
                "--tau-c", "0.999"});
  CHECK(r.code == 4);
  check_json_error(r.err, "BlockedOnReview");
  const auto queue = ReviewQueue::load(d / "review_queue.json");
  CHECK(queue.pending_count() > 0);
}
