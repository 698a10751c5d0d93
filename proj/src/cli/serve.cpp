#include <fstream>
#include <iterator>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "eigenspine/cli.hpp"

namespace eigenspine::cli {
namespace {

using nlohmann::json;

constexpr const char* kQueueFile = "review_queue.json";

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, json{{"error", message}});
}

json summary(const ReviewItem& item) {
  json reasons = json::array();
  for (Reason r : item.reasons) reasons.push_back(to_string(r));
  return json{{"sample_id", item.sample_id},
              {"iteration", item.iteration},
              {"reasons", std::move(reasons)},
              {"n_instances", item.instances.size()},
              {"status", to_string(item.status)},
              {"image_url", "/image/" + item.sample_id}};
}

Resolution parse_resolution(const json& body) {
  Resolution r;
  r.action = review_action_from_string(body.at("action").get<std::string>());
  if (body.contains("contours")) {
    for (const json& c : body["contours"]) {
      std::vector<double> coords;
      for (const json& p : c) {
        if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::kParse, "vertex must be [x, y]");
        coords.push_back(p[0].get<double>());
        coords.push_back(p[1].get<double>());
      }
      r.contours.emplace_back(std::move(coords));
    }
  }
  if (body.contains("flags")) {
    for (const json& f : body["flags"]) r.flags.push_back(review_flag_from_string(f.get<std::string>()));
  }
  return r;
}

}  // namespace

ReviewServer::ReviewServer(std::filesystem::path state_dir, double min_area_px2)
    : state_dir_(std::move(state_dir)),
      queue_(ReviewQueue::load(state_dir_ / kQueueFile, min_area_px2)),
      server_(std::make_unique<httplib::Server>()) {
  if (!std::filesystem::is_directory(state_dir_)) {
    throw Error(ErrorCode::kIo, "state directory " + state_dir_.string() + " does not exist");
  }
  // Without SO_REUSEPORT so that a second server on the same port fails.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof yes);
  });
  routes();
}

ReviewServer::~ReviewServer() { stop(); }

int ReviewServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

void ReviewServer::listen() { server_->listen_after_bind(); }

void ReviewServer::stop() {
  if (server_) server_->stop();
}

void ReviewServer::wait_until_ready() const { server_->wait_until_ready(); }

void ReviewServer::routes() {
  server_->Get("/queue", [this](const httplib::Request&, httplib::Response& res) {
    json items = json::array();
    for (const auto& item : queue_.pending()) items.push_back(summary(item));
    send_json(res, 200, json{{"items", std::move(items)}});
  });

  server_->Get(R"(/sample/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto item = queue_.find(req.matches[1]);
    if (!item) return send_error(res, 404, "unknown sample");
    send_json(res, 200, json(*item));
  });

  server_->Get(R"(/image/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto item = queue_.find(req.matches[1]);
    if (!item || item->image.empty()) return send_error(res, 404, "no image for sample");
    std::filesystem::path path = item->image;
    if (path.is_relative()) path = state_dir_ / path;
    std::ifstream in(path, std::ios::binary);
    if (!in) return send_error(res, 404, "image file missing");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    res.status = 200;
    res.set_content(std::move(bytes), "image/png");
  });

  server_->Post("/resolve", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    Resolution resolution;
    std::string id;
    try {
      body = json::parse(req.body);
      id = body.at("sample_id").get<std::string>();
      resolution = parse_resolution(body);
    } catch (const json::exception& e) {
      return send_error(res, 400, e.what());
    } catch (const Error& e) {
      return send_error(res, 400, e.what());
    }
    std::lock_guard lock(write_mutex_);
    const auto existing = queue_.find(id);
    if (!existing) return send_error(res, 404, "unknown sample");
    if (existing->status != ReviewStatus::kPending) {
      return send_error(res, 409, "already " + to_string(existing->status));
    }
    try {
      const ReviewItem item = queue_.resolve(id, resolution);
      queue_.save(state_dir_ / kQueueFile);
      send_json(res, 200, summary(item));
    } catch (const Error& e) {
      send_error(res, e.code() == ErrorCode::kValidation ? 422 : 400, e.what());
    }
  });
}

}  // namespace eigenspine::cli
