#include "aesp/gateway/server.hpp"

#include <httplib.h>

#include <algorithm>

namespace aesp::gateway {

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(canonical_json(body), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_json(res, error_body(e.code(), e.what()), http_status(e.code()));
  } catch (const Json::exception& e) {
    send_json(res, error_body(Errc::parse_error, e.what()), 400);
  } catch (const std::exception& e) {
    send_json(res, Json{{"code", "INTERNAL"}, {"message", e.what()}}, 500);
  }
}

Json request_list(const std::vector<review::ReviewRequest>& rs) {
  Json arr = Json::array();
  for (const auto& r : rs) arr.push_back(r.to_json());
  return arr;
}

}  // namespace

std::int64_t wall_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

int http_status(Errc code) noexcept {
  switch (code) {
    case Errc::unknown_request:
    case Errc::unknown_agent:
    case Errc::unknown_session: return 404;
    case Errc::already_resolved:
    case Errc::past_deadline:
    case Errc::review_expired:
    case Errc::agent_frozen:
    case Errc::wrong_state: return 409;
    case Errc::tier_violation: return 422;
    case Errc::invalid_argument:
    case Errc::parse_error:
    case Errc::id_mismatch: return 400;
    default: return 500;
  }
}

Json error_body(Errc code, std::string_view message) {
  return Json{{"code", to_string(code)}, {"message", std::string(message)}};
}

std::shared_ptr<EventBus::Subscriber> EventBus::subscribe() {
  auto s = std::make_shared<Subscriber>();
  std::lock_guard lock(mu_);
  subs_.push_back(s);
  return s;
}

void EventBus::unsubscribe(const std::shared_ptr<Subscriber>& s) {
  std::lock_guard lock(mu_);
  subs_.remove(s);
}

void EventBus::publish(const std::string& frame) {
  std::lock_guard lock(mu_);
  for (auto it = subs_.begin(); it != subs_.end();) {
    auto& s = **it;
    bool drop = false;
    {
      std::lock_guard sl(s.mu);
      if (s.frames.size() >= buffer_) {
        s.dropped = true;
        drop = true;
      } else {
        s.frames.push_back(frame);
      }
    }
    s.cv.notify_all();
    it = drop ? subs_.erase(it) : std::next(it);
  }
}

void EventBus::close_all() {
  std::lock_guard lock(mu_);
  for (auto& s : subs_) {
    {
      std::lock_guard sl(s->mu);
      s->closed = true;
    }
    s->cv.notify_all();
  }
  subs_.clear();
}

std::size_t EventBus::size() const {
  std::lock_guard lock(mu_);
  return subs_.size();
}

std::string EventBus::frame(const review::ReviewEvent& e) {
  return "event: " + std::string(review::to_string(e.type)) + "\ndata: " + canonical_json(e.to_json()) + "\n\n";
}

ApiServer::ApiServer(Gateway& gateway, ServerOptions options, Clock clock)
    : gateway_(gateway),
      options_(options),
      clock_(std::move(clock)),
      bus_(options.sse_buffer),
      http_(std::make_unique<httplib::Server>()) {
  const auto workers = options_.worker_threads;
  http_->new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
  listener_token_ =
      gateway_.reviews().subscribe([this](const review::ReviewEvent& e) { bus_.publish(EventBus::frame(e)); });
  routes();
}

ApiServer::~ApiServer() {
  stop();
  gateway_.reviews().unsubscribe(listener_token_);
}

void ApiServer::routes() {
  http_->Get("/api/reviews", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      if (!req.has_param("status")) return send_json(res, request_list(gateway_.reviews().all()));
      auto status = review::review_status_from_string(req.get_param_value("status"));
      if (status == review::ReviewStatus::pending) {
        return send_json(res, request_list(gateway_.reviews().pending()));
      }
      auto all = gateway_.reviews().all();
      all.erase(std::remove_if(all.begin(), all.end(), [&](const auto& r) { return r.status != status; }),
                all.end());
      send_json(res, request_list(all));
    });
  });

  http_->Post(R"(/api/reviews/([^/]+)/respond)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      auto response = review::ReviewResponse::from_json(parse_json(req.body));
      response.request_id = id;
      const auto now = clock_();
      response.timestamp = now;
      if (response.responder.empty()) response.responder = "console";
      gateway_.reviews().respond(id, response, now);
      auto r = gateway_.reviews().find(id);
      send_json(res, Json{{"request", r ? r->to_json() : Json(nullptr)}, {"response", response.to_json()}});
    });
  });

  // agent-facing: blocks until the action is executed, rejected, frozen or expired
  http_->Post("/api/authorize", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      auto body = parse_json(req.body);
      auto action = policy::ActionRequest::from_json(body.at("action"));
      auto level = privacy::privacy_level_from_string(body.value("privacy_level", "isolated"));
      const auto now = clock_();
      if (action.timestamp == 0) action.timestamp = now;
      send_json(res, gateway_.authorize(action, level, now).to_json());
    });
  });

  http_->Get("/api/agents", [this](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      Json arr = Json::array();
      const auto now = clock_();
      for (const auto& id : gateway_.agent_ids()) arr.push_back(gateway_.agent_json(id, now));
      send_json(res, arr);
    });
  });

  http_->Post(R"(/api/agents/([^/]+)/(freeze|unfreeze))",
              [this](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const std::string id = req.matches[1];
                  if (req.matches[2] == "freeze") gateway_.freeze(id, clock_());
                  else gateway_.unfreeze(id);
                  send_json(res, gateway_.agent_json(id, clock_()));
                });
              });

  http_->Get(R"(/api/budget/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, gateway_.budget_json(req.matches[1], clock_())); });
  });

  http_->Get("/api/events", [this](const httplib::Request&, httplib::Response& res) {
    if (bus_.size() >= options_.max_streams) {
      return send_json(res, Json{{"code", "TOO_MANY_STREAMS"}, {"message", "event stream limit reached"}}, 503);
    }
    // subscribe before the handler returns so nothing published after the
    // request is accepted can be missed; nothing published before is replayed
    auto sub = bus_.subscribe();
    auto keepalive = options_.keepalive;
    res.set_header("Cache-Control", "no-cache");
    res.set_chunked_content_provider(
        "text/event-stream",
        [sub, keepalive, greeted = false](std::size_t, httplib::DataSink& sink) mutable {
          if (!greeted) {
            greeted = true;
            static const std::string hello = ": connected\n\n";
            return sink.write(hello.data(), hello.size());
          }
          std::deque<std::string> batch;
          {
            std::unique_lock lock(sub->mu);
            sub->cv.wait_for(lock, keepalive,
                             [&] { return !sub->frames.empty() || sub->dropped || sub->closed; });
            if (sub->dropped) return false;
            batch.swap(sub->frames);
            if (sub->closed && batch.empty()) {
              lock.unlock();
              sink.done();
              return true;
            }
          }
          if (batch.empty()) {
            static const std::string ping = ": keepalive\n\n";
            return sink.write(ping.data(), ping.size());
          }
          for (const auto& f : batch) {
            if (!sink.write(f.data(), f.size())) return false;
          }
          return true;
        },
        [this, sub](bool) { bus_.unsubscribe(sub); });
  });
}

int ApiServer::start(const std::string& host, int port) {
  int bound = port == 0 ? http_->bind_to_any_port(host) : (http_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::invalid_argument, "cannot bind " + host + ":" + std::to_string(port));
  serve_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  if (options_.sweep_interval.count() > 0) sweep_thread_ = std::thread([this] { sweeper_loop(); });
  return bound;
}

void ApiServer::run(const std::string& host, int port) {
  if (!http_->bind_to_port(host, port)) {
    throw Error(Errc::invalid_argument, "cannot bind " + host + ":" + std::to_string(port));
  }
  if (options_.sweep_interval.count() > 0) sweep_thread_ = std::thread([this] { sweeper_loop(); });
  http_->listen_after_bind();
}

void ApiServer::stop() {
  {
    std::lock_guard lock(stop_mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  stop_cv_.notify_all();
  bus_.close_all();
  http_->stop();
  if (serve_thread_.joinable()) serve_thread_.join();
  if (sweep_thread_.joinable()) sweep_thread_.join();
}

void ApiServer::sweeper_loop() {
  std::unique_lock lock(stop_mu_);
  while (!stopping_) {
    stop_cv_.wait_for(lock, options_.sweep_interval, [this] { return stopping_; });
    if (stopping_) break;
    lock.unlock();
    try {
      gateway_.expire_sweep(clock_());
    } catch (...) {
      // storage trouble must not kill the sweeper; next tick retries
    }
    lock.lock();
  }
}

}  // namespace aesp::gateway
