#include <doctest.h>

#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "eigenspine/cli.hpp"
#include "eigenspine/review.hpp"
#include "support.hpp"

using namespace eigenspine;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "eigenspine");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

// Serves a state directory on an ephemeral port for the lifetime of the object.
class LiveServer {
 public:
  explicit LiveServer(const fs::path& state) : server_(state) {
    port_ = server_.bind("127.0.0.1", 0);
    REQUIRE(port_ > 0);
    thread_ = std::thread([this] { server_.listen(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }
  int port() const { return port_; }

 private:
  cli::ReviewServer server_;
  int port_ = -1;
  std::thread thread_;
};

json post(httplib::Client& c, const json& body, int expected) {
  auto res = c.Post("/resolve", body.dump(), "application/json");
  REQUIRE(res);
  CHECK(res->status == expected);
  return json::parse(res->body);
}

}  // namespace

TEST_CASE("fresh state has an empty queue") {
  const auto dir = fixture::temp_dir("serve_fresh");
  LiveServer s(dir);
  auto c = s.client();
  auto res = c.Get("/queue");
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(json::parse(res->body) == json{{"items", json::array()}});
  CHECK(c.Get("/sample/nothing")->status == 404);
  CHECK(c.Get("/image/nothing")->status == 404);
  post(c, {{"sample_id", "nothing"}, {"action", "approve"}}, 404);
  auto bad = c.Post("/resolve", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  fs::remove_all(dir);
}

TEST_CASE("a second server cannot take the same port") {
  const auto dir = fixture::temp_dir("serve_port");
  LiveServer s(dir);
  cli::ReviewServer other(dir);
  CHECK(other.bind("127.0.0.1", s.port()) == -1);
  CHECK(run_cli({"serve", "--state", dir.string(), "--port", std::to_string(s.port())}) == 5);
  fs::remove_all(dir);
}

TEST_CASE("review round trip unblocks a strict engine run") {
  const auto root = fixture::temp_dir("serve_flow");
  const auto corpus = root / "corpus", state = root / "state";
  REQUIRE(run_cli({"synth", "--out", corpus.string(), "--n-seed", "10", "--n-pool", "6", "--seed",
                   "8", "--memorized-fraction", "0"}) == 0);
  const std::vector<std::string> engine{"engine", "--seed-set", (corpus / "seed.jsonl").string(),
                                        "--pool", (corpus / "pool.jsonl").string(), "--out",
                                        state.string(), "--strict", "--tau-c", "0.999",
                                        "--lambda-ss", "0.8", "--lambda-ps", "0.2"};
  REQUIRE(run_cli(engine) == 4);

  {
    LiveServer s(state);
    auto c = s.client();
    const auto queue = json::parse(c.Get("/queue")->body)["items"];
    REQUIRE(queue.size() >= 3);
    const std::string first = queue[0]["sample_id"];

    const auto detail = c.Get("/sample/" + first);
    REQUIRE(detail);
    CHECK(detail->status == 200);
    CHECK(json::parse(detail->body)["sample_id"] == first);
    const auto image = c.Get(queue[0]["image_url"].get<std::string>());
    REQUIRE(image);
    CHECK(image->status == 200);
    CHECK(image->get_header_value("Content-Type") == "image/png");
    CHECK(image->body.substr(1, 3) == "PNG");

    // A self-intersecting correction is refused and leaves the item pending.
    const json eight = json::array({json::array({100, 100}), json::array({160, 140}),
                                    json::array({160, 100}), json::array({100, 140})});
    post(c, {{"sample_id", first}, {"action", "correct"}, {"contours", json::array({eight})}}, 422);
    CHECK(json::parse(c.Get("/queue")->body)["items"].size() == queue.size());

    // Approve one, correct one, flag one, approve the rest.
    post(c, {{"sample_id", first}, {"action", "approve"}}, 200);
    post(c, {{"sample_id", first}, {"action", "approve"}}, 409);
    json rect = json::array();
    for (std::size_t i = 0; i < 14; ++i) {
      const auto v = fixture::rect(256, 256, 50, 30).vertex(i);
      rect.push_back(json::array({v.x, v.y}));
    }
    const std::string second = queue[1]["sample_id"];
    const auto corrected =
        post(c, {{"sample_id", second}, {"action", "correct"}, {"contours", json::array({rect})}}, 200);
    CHECK(corrected["status"] == "corrected");
    const std::string third = queue[2]["sample_id"];
    const auto flagged = post(
        c, {{"sample_id", third}, {"action", "flag"}, {"flags", json::array({"SPINAL_FRACTURE"})}},
        200);
    CHECK(flagged["status"] == "rejected");
    for (std::size_t k = 3; k < queue.size(); ++k)
      post(c, {{"sample_id", queue[k]["sample_id"]}, {"action", "approve"}}, 200);
    CHECK(json::parse(c.Get("/queue")->body)["items"].empty());
  }

  // Resolutions were persisted before each response.
  const auto saved = ReviewQueue::load(state / "review_queue.json");
  CHECK(saved.pending_count() == 0);

  REQUIRE(run_cli(engine) == 0);
  std::ifstream snap(state / "snapshot_001.jsonl");
  std::string line;
  bool saw_corrected = false;
  while (std::getline(snap, line)) {
    const auto j = json::parse(line);
    if (j["source"] == "corrected") saw_corrected = true;
  }
  CHECK(saw_corrected);
  fs::remove_all(root);
}
