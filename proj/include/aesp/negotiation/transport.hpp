#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "aesp/negotiation/protocol.hpp"

namespace aesp::negotiation {

/// Queue-backed transport for tests and in-process demos. Packets are held
/// until deliver_pending() so callers control interleaving.
class InMemoryTransport final : public MessageSender {
 public:
  void attach(NegotiationProtocol& party);
  void send(const WirePacket& packet) override;

  /// Delivers queued packets in FIFO order (including ones produced while
  /// delivering). Returns the number delivered.
  std::size_t deliver_pending();
  /// Every packet ever sent, for replay experiments.
  std::vector<WirePacket> sent() const;
  void set_fail_sends(bool fail) { fail_sends_ = fail; }

 private:
  mutable std::mutex mu_;
  std::map<std::string, NegotiationProtocol*> parties_;
  std::deque<WirePacket> queue_;
  std::vector<WirePacket> log_;
  bool fail_sends_ = false;
};

/// Posts packets as JSON to http://host:port/negotiation/inbox of the
/// recipient, looked up by agent id.
class HttpTransport final : public MessageSender {
 public:
  void add_route(const std::string& agent_id, std::string host, int port);
  void send(const WirePacket& packet) override;

 private:
  std::mutex mu_;
  std::map<std::string, std::pair<std::string, int>> routes_;
};

/// Loopback HTTP endpoint feeding one protocol instance.
class HttpInbox {
 public:
  explicit HttpInbox(NegotiationProtocol& party);
  ~HttpInbox();
  HttpInbox(const HttpInbox&) = delete;
  HttpInbox& operator=(const HttpInbox&) = delete;

  /// Binds to 127.0.0.1 on an ephemeral port and starts serving.
  int start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace aesp::negotiation
