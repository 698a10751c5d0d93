#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "eigenspine/error.hpp"
#include "eigenspine/review.hpp"

namespace httplib {
class Server;
}

namespace eigenspine::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitUsage = 2,  // bad arguments or malformed input
  kExitRankDeficient = 3,
  kExitBlockedOnReview = 4,
  kExitPortInUse = 5,
};

int exit_code_for(ErrorCode code);

/// Entry point of the command-line tool. Errors go to err as one JSON
/// object per line: {"error": "<code>", "message": "..."}.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Flat "key = value" document; '#' starts a comment, values may be quoted.
/// Throws kParse on malformed lines and duplicate keys.
std::map<std::string, std::string> parse_config(std::istream& in);
std::map<std::string, std::string> load_config(const std::filesystem::path& path);

/// Review API over HTTP for an engine output directory:
///   GET  /queue          pending items
///   GET  /sample/{id}    one item with its candidate instances
///   GET  /image/{id}     source image as PNG
///   POST /resolve        {sample_id, action, contours?, flags?}
/// Every accepted resolution is written to review_queue.json before the
/// response is sent.
class ReviewServer {
 public:
  explicit ReviewServer(std::filesystem::path state_dir, double min_area_px2 = 200.0);
  ~ReviewServer();
  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Port 0 picks a free port. Returns the bound port, or -1 when the port
  /// cannot be bound.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

  const ReviewQueue& queue() const noexcept { return queue_; }

 private:
  void routes();

  std::filesystem::path state_dir_;
  ReviewQueue queue_;
  std::mutex write_mutex_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace eigenspine::cli
