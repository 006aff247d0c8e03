#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "aesp/error.hpp"
#include "aesp/gateway/gateway.hpp"

namespace httplib {
class Server;
}

namespace aesp::gateway {

using Clock = std::function<std::int64_t()>;
std::int64_t wall_clock_ms();

/// HTTP status for an error code: 404 unknown ids, 409 state conflicts,
/// 422 tier violations, 400 malformed input, 500 otherwise.
int http_status(Errc code) noexcept;
/// {"code": ..., "message": ...}
Json error_body(Errc code, std::string_view message);

/// Fan-out of review events to stream subscribers. Publishing never blocks
/// on a subscriber: a subscriber whose buffer is full is dropped.
class EventBus {
 public:
  struct Subscriber {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<std::string> frames;
    bool dropped = false;
    bool closed = false;
  };

  explicit EventBus(std::size_t buffer = 256) : buffer_(buffer) {}

  std::shared_ptr<Subscriber> subscribe();
  void unsubscribe(const std::shared_ptr<Subscriber>& s);
  void publish(const std::string& frame);
  /// Wakes and closes every subscriber.
  void close_all();
  std::size_t size() const;

  /// "event: <type>\ndata: <canonical json>\n\n"
  static std::string frame(const review::ReviewEvent& e);

 private:
  std::size_t buffer_;
  mutable std::mutex mu_;
  std::list<std::shared_ptr<Subscriber>> subs_;
};

struct ServerOptions {
  std::size_t sse_buffer = 256;
  std::size_t max_streams = 16;
  std::size_t worker_threads = 32;
  std::chrono::milliseconds sweep_interval{1000};  // 0 disables the sweeper
  std::chrono::milliseconds keepalive{15000};
};

/// The review/console API:
///   GET  /api/reviews[?status=pending]
///   POST /api/reviews/{id}/respond
///   GET  /api/agents
///   POST /api/agents/{id}/freeze | /api/agents/{id}/unfreeze
///   GET  /api/budget/{agent_id}
///   GET  /api/events            (server-sent events, live only)
///   POST /api/authorize         {action, privacy_level?}; blocks like authorize()
class ApiServer {
 public:
  explicit ApiServer(Gateway& gateway, ServerOptions options = {}, Clock clock = wall_clock_ms);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port;
  /// returns the bound port. Errors: invalid_argument if binding fails.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  std::size_t stream_count() const { return bus_.size(); }
  EventBus& bus() noexcept { return bus_; }

 private:
  void routes();
  void sweeper_loop();

  Gateway& gateway_;
  ServerOptions options_;
  Clock clock_;
  EventBus bus_;
  std::unique_ptr<httplib::Server> http_;
  std::uint64_t listener_token_ = 0;
  std::thread serve_thread_;
  std::thread sweep_thread_;
  std::mutex stop_mu_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
};

}  // namespace aesp::gateway
