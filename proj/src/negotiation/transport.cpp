#include "aesp/negotiation/transport.hpp"

#include <thread>

#include <httplib.h>

#include "aesp/error.hpp"

namespace aesp::negotiation {

void InMemoryTransport::attach(NegotiationProtocol& party) {
  std::lock_guard lock(mu_);
  parties_[party.agent_id()] = &party;
}

void InMemoryTransport::send(const WirePacket& packet) {
  std::lock_guard lock(mu_);
  if (fail_sends_) throw Error(Errc::transport_failure, "in-memory transport set to fail");
  if (parties_.count(packet.to_agent) == 0) {
    throw Error(Errc::transport_failure, "no party attached for " + packet.to_agent);
  }
  queue_.push_back(packet);
  log_.push_back(packet);
}

std::size_t InMemoryTransport::deliver_pending() {
  std::size_t delivered = 0;
  for (;;) {
    WirePacket packet;
    NegotiationProtocol* target = nullptr;
    {
      std::lock_guard lock(mu_);
      if (queue_.empty()) break;
      packet = std::move(queue_.front());
      queue_.pop_front();
      target = parties_.at(packet.to_agent);
    }
    target->receive(packet);
    ++delivered;
  }
  return delivered;
}

std::vector<WirePacket> InMemoryTransport::sent() const {
  std::lock_guard lock(mu_);
  return log_;
}

void HttpTransport::add_route(const std::string& agent_id, std::string host, int port) {
  std::lock_guard lock(mu_);
  routes_[agent_id] = {std::move(host), port};
}

void HttpTransport::send(const WirePacket& packet) {
  std::pair<std::string, int> route;
  {
    std::lock_guard lock(mu_);
    auto it = routes_.find(packet.to_agent);
    if (it == routes_.end()) throw Error(Errc::transport_failure, "no route to " + packet.to_agent);
    route = it->second;
  }
  httplib::Client client(route.first, route.second);
  client.set_connection_timeout(2);
  auto res = client.Post("/negotiation/inbox", packet.to_json().dump(), "application/json");
  if (!res) {
    throw Error(Errc::transport_failure, "HTTP error: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(Errc::transport_failure,
                "peer refused packet (" + std::to_string(res->status) + "): " + res->body);
  }
}

struct HttpInbox::Impl {
  NegotiationProtocol& party;
  httplib::Server server;
  std::thread thread;
  explicit Impl(NegotiationProtocol& p) : party(p) {}
};

HttpInbox::HttpInbox(NegotiationProtocol& party) : impl_(std::make_unique<Impl>(party)) {
  impl_->server.Post("/negotiation/inbox", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto packet = WirePacket::from_json(parse_json(req.body));
      auto msg = impl_->party.receive(packet);
      res.set_content(Json{{"message_id", msg.message_id}}.dump(), "application/json");
    } catch (const Error& e) {
      res.status = 422;
      res.set_content(Json{{"code", to_string(e.code())}, {"message", e.what()}}.dump(),
                      "application/json");
    }
  });
}

HttpInbox::~HttpInbox() { stop(); }

int HttpInbox::start() {
  int port = impl_->server.bind_to_any_port("127.0.0.1");
  if (port <= 0) throw Error(Errc::transport_failure, "could not bind negotiation inbox");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpInbox::stop() {
  if (impl_ && impl_->thread.joinable()) {
    impl_->server.stop();
    impl_->thread.join();
  }
}

}  // namespace aesp::negotiation
