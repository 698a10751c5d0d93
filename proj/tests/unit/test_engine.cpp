#include <doctest.h>

#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eigenspine/engine.hpp"
#include "eigenspine/polygon.hpp"
#include "eigenspine/error.hpp"
#include "support.hpp"

using namespace eigenspine;

namespace {

// Returns a fixed sample per id and per iteration; the last script entry
// repeats once the iterations run past it.
class ScriptedPredictor : public Predictor {
 public:
  std::map<std::string, std::vector<SpineSample>> script;
  int iteration = 0;

  std::vector<VertebraInstance> predict(const PoolItem& item) const override {
    const auto& steps = script.at(item.sample_id);
    const std::size_t k = std::min<std::size_t>(iteration, steps.size() - 1);
    return steps[k].instances;
  }
  void refresh(std::span<const SpineSample>, int it) override { iteration = it; }
};

const ImageSize kSize{200, 600};

PoolItem pool_item(const std::string& id, double fill = 0.0) {
  PoolItem p;
  p.sample_id = id;
  p.size = kSize;
  p.load_image = [fill] { return GrayImage(32, 32, fill); };
  p.truth = fixture::column(id, 17);
  return p;
}

std::vector<ReferenceImage> references() { return {{"ref", GrayImage(32, 32, 255.0)}}; }

std::vector<SpineSample> seeds() { return {fixture::column("seed", 17)}; }

EngineConfig config(SelectionMode mode) {
  EngineConfig cfg;
  cfg.selection_mode = mode;
  return cfg;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kIo;
}

std::set<std::string> ids_of(const std::vector<AnnotationRecord>& snapshot) {
  std::set<std::string> out;
  for (const auto& r : snapshot) out.insert(r.sample.sample_id);
  return out;
}

// good: always fine. few: 9 instances. late: 9 instances at first, full later.
std::shared_ptr<ScriptedPredictor> scripted() {
  auto p = std::make_shared<ScriptedPredictor>();
  p->script["good"] = {fixture::column("good", 17)};
  p->script["few"] = {fixture::column("few", 9)};
  p->script["late"] = {fixture::column("late", 9), fixture::column("late", 17)};
  return p;
}

std::vector<PoolItem> scripted_pool() {
  return {pool_item("good"), pool_item("few"), pool_item("late")};
}

}  // namespace

TEST_CASE("an empty pool converges at once") {
  DataEngine e(config(SelectionMode::kCumulative), seeds(), {}, references());
  e.attach(scripted());
  const auto results = e.run();
  CHECK(results.size() == 1);
  CHECK(e.converged());
  CHECK(e.snapshot().empty());
  CHECK(e.ledger().selected(1).empty());
}

TEST_CASE("no predictor") {
  DataEngine e(config(SelectionMode::kCumulative), seeds(), scripted_pool(), references());
  CHECK(code_of([&] { e.run_iteration(); }) == ErrorCode::kNoPredictor);
}

TEST_CASE("duplicate pool ids are refused") {
  CHECK(code_of([] {
          DataEngine e({}, seeds(), {pool_item("a"), pool_item("a")}, references());
        }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("copies of references are rejected for privacy") {
  std::vector<PoolItem> pool{pool_item("c1", 255.0), pool_item("c2", 255.0)};
  auto p = std::make_shared<ScriptedPredictor>();
  p->script["c1"] = {fixture::column("c1", 17)};
  p->script["c2"] = {fixture::column("c2", 17)};
  for (auto mode : {SelectionMode::kNoFilter, SelectionMode::kIndependent,
                    SelectionMode::kCumulative}) {
    DataEngine e(config(mode), seeds(), pool, references());
    e.attach(p);
    const auto r = e.run_iteration();
    for (const auto& entry : r.ledger.entries) {
      CHECK_FALSE(entry.v);
      CHECK(entry.reasons == std::vector{Reason::kPrivacy});
    }
    CHECK(r.snapshot.empty());
    for (const auto& a : e.privacy_audits()) CHECK(a.max_cs == doctest::Approx(1.0));
  }
}

TEST_CASE("cumulative rejections are permanent, independent ones are not") {
  DataEngine cum(config(SelectionMode::kCumulative), seeds(), scripted_pool(), references());
  cum.attach(scripted());
  cum.run();
  DataEngine ind(config(SelectionMode::kIndependent), seeds(), scripted_pool(), references());
  ind.attach(scripted());
  ind.run();

  CHECK(cum.converged());
  CHECK(ind.converged());
  CHECK(cum.ledger().selected(1) == std::set<std::string>{"good"});
  CHECK(cum.ledger().selected(cum.iteration()) == std::set<std::string>{"good"});
  CHECK(ind.ledger().selected(ind.iteration()) == std::set<std::string>{"good", "late"});

  for (int i = 2; i <= cum.iteration(); ++i) {
    const auto prev = cum.ledger().selected(i - 1);
    for (const auto& id : cum.ledger().selected(i)) CHECK(prev.count(id) == 1);
  }
  // A permanently rejected sample keeps its earlier reason.
  const auto& last = cum.ledger().iterations().back().entries;
  const auto late = std::find_if(last.begin(), last.end(), [](auto& e) { return e.sample_id == "late"; });
  CHECK(late->reasons == std::vector{Reason::kTooFewInstances});
}

TEST_CASE("snapshot is exactly the selected set") {
  for (auto mode : {SelectionMode::kNoFilter, SelectionMode::kIndependent,
                    SelectionMode::kCumulative}) {
    DataEngine e(config(mode), seeds(), scripted_pool(), references());
    e.attach(scripted());
    for (const auto& r : e.run()) {
      std::set<std::string> v1;
      for (const auto& entry : r.ledger.entries)
        if (entry.v) v1.insert(entry.sample_id);
      CHECK(ids_of(r.snapshot) == v1);
      CHECK(r.ledger.entries.size() == 3);
      CHECK(r.metrics.accepted == v1.size());
      CHECK(r.metrics.rejected == 3 - v1.size());
    }
  }
}

TEST_CASE("no_filter accepts everything that passes privacy") {
  DataEngine e(config(SelectionMode::kNoFilter), seeds(), scripted_pool(), references());
  e.attach(scripted());
  e.run();
  CHECK(e.ledger().selected(1) == std::set<std::string>{"good", "few", "late"});
  CHECK(e.review_queue().items().empty());
}

TEST_CASE("failing samples are queued for review") {
  DataEngine e(config(SelectionMode::kIndependent), seeds(), scripted_pool(), references());
  e.attach(scripted());
  const auto r = e.run_iteration();
  CHECK(r.metrics.pending_review == 2);
  const auto few = e.review_queue().find("few");
  REQUIRE(few);
  CHECK(few->iteration == 1);
  CHECK(few->reasons == std::vector{Reason::kTooFewInstances});
  CHECK(few->instances.size() == 9);
  CHECK(few->image_size.height == 600);
}

TEST_CASE("strict review blocks until resolved") {
  EngineConfig cfg = config(SelectionMode::kCumulative);
  cfg.strict_review = true;
  DataEngine e(cfg, seeds(), scripted_pool(), references());
  e.attach(scripted());
  CHECK(code_of([&] { e.run_iteration(); }) == ErrorCode::kBlockedOnReview);
  CHECK(e.iteration() == 0);
  CHECK(e.ledger().iterations().empty());
  CHECK(e.review_queue().pending_count() == 2);

  e.review_queue().resolve("few", {ReviewAction::kApprove, {}, {}});
  CHECK(code_of([&] { e.run_iteration(); }) == ErrorCode::kBlockedOnReview);
  auto corrected = fixture::column("late", 12).instances;
  std::vector<ContourVector> contours;
  for (const auto& v : corrected) contours.push_back(v.contour);
  e.review_queue().resolve("late", {ReviewAction::kCorrect, contours, {}});

  const auto r = e.run_iteration();
  CHECK(r.iteration == 1);
  CHECK(ids_of(r.snapshot) == std::set<std::string>{"good", "few", "late"});
  for (const auto& rec : r.snapshot) {
    if (rec.sample.sample_id == "late") {
      CHECK(rec.source == LabelSource::kCorrected);
      CHECK(rec.sample.instances.size() == 12);
    } else {
      CHECK(rec.source == LabelSource::kPseudo);
    }
  }
}

TEST_CASE("manual rejection is recorded") {
  DataEngine e(config(SelectionMode::kIndependent), seeds(), scripted_pool(), references());
  e.attach(scripted());
  e.run_iteration();
  e.review_queue().resolve("few", {ReviewAction::kFlag, {}, {ReviewFlag::kUnclear}});
  const auto r = e.run_iteration();
  const auto few = std::find_if(r.ledger.entries.begin(), r.ledger.entries.end(),
                                [](auto& x) { return x.sample_id == "few"; });
  CHECK_FALSE(few->v);
  CHECK(few->reasons == std::vector{Reason::kManualReject});
}

TEST_CASE("max_iterations zero runs nothing") {
  EngineConfig cfg = config(SelectionMode::kCumulative);
  cfg.max_iterations = 0;
  DataEngine e(cfg, seeds(), scripted_pool(), references());
  e.attach(scripted());
  CHECK(e.run().empty());
  CHECK(e.iteration() == 0);
}

TEST_CASE("ledger and metrics serialization") {
  const LedgerEntry entry{"gen_1", false, {Reason::kLowArea, Reason::kPrivacy}};
  const auto j = nlohmann::json::parse(SelectionLedger::to_json_line(3, entry));
  CHECK(j["iteration"] == 3);
  CHECK(j["sample_id"] == "gen_1");
  CHECK(j["v"] == 0);
  CHECK(j["reasons"] == nlohmann::json{"LOW_AREA", "PRIVACY"});

  CHECK(metrics_csv_header() == "iteration,accepted,rejected,pending_review,ap,ar,smape,ed");
  IterationMetrics m;
  m.iteration = 2;
  m.accepted = 5;
  m.rejected = 1;
  m.labels.ap = 97.5;
  CHECK(to_csv_row(m) == "2,5,1,0,97.500000,0.000000,0.000000,0.000000");
}

TEST_CASE("noisy oracle") {
  PoolItem item = pool_item("gen_7");
  NoisyOracle a(OracleSpec{}, 10, 4), b(OracleSpec{}, 10, 4);
  const auto pa = a.predict(item), pb = b.predict(item);
  REQUIRE(pa.size() == pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i].contour == pb[i].contour);

  CHECK(a.level() == 0);
  std::vector<SpineSample> labeled(45, fixture::column("x", 3));
  a.refresh(labeled, 1);
  CHECK(a.level() == 2);
  a.refresh(std::span<const SpineSample>(labeled.data(), 5), 2);
  CHECK(a.level() == 2);  // never decreases
  labeled.resize(400, fixture::column("x", 3));
  a.refresh(labeled, 3);
  CHECK(a.level() == 2);  // capped

  PoolItem blind = item;
  blind.truth.reset();
  CHECK_THROWS_AS(a.predict(blind), Error);
}

TEST_CASE("nearest coefficient baseline") {
  NearestCoeff p(4);
  CHECK(code_of([&] { p.predict(pool_item("a")); }) == ErrorCode::kNoPredictor);
  std::vector<SpineSample> labeled;
  for (int i = 0; i < 6; ++i) labeled.push_back(fixture::column("s", 15, 30 + i));
  p.refresh(labeled, 0);
  REQUIRE(p.basis());
  const auto out = p.predict(pool_item("a"));
  CHECK(out.size() == 15);
  for (const auto& v : out) CHECK(v.confidence == doctest::Approx(1.0));
  // Slot 3 averages the six columns' vertebra 3.
  const Point c = geom::centroid(out[3].contour);
  CHECK(c.y == doctest::Approx(40 + 3 * 32.5).epsilon(1e-6));
}

TEST_CASE("tau sweep has one point per threshold") {
  auto p = scripted();
  const auto pool = scripted_pool();
  const std::vector<double> taus{0.1, 0.5, 0.95};
  const auto sweep = tau_c_sweep(pool, *p, EngineConfig{}, taus);
  REQUIRE(sweep.size() == 3);
  CHECK(sweep[0].tau_c == 0.1);
  // Confidence 0.9 clears 0.5 but not 0.95.
  CHECK(sweep[2].mean_ed >= sweep[1].mean_ed);
}
