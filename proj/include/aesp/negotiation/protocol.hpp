#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <string>

#include "aesp/crypto/envelope.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/negotiation/fsm.hpp"

namespace aesp::negotiation {

struct NegotiationMessage {
  MessageType type = MessageType::offer;
  std::string session_id;
  Json payload;
  std::string sender_agent;
  std::string message_id;
  std::int64_t timestamp = 0;

  Json to_json() const;
  static NegotiationMessage from_json(const Json& j);
};

/// What travels on the wire: routing header plus the sealed message.
struct WirePacket {
  std::string from_agent;
  std::string to_agent;
  crypto::EncryptedEnvelope envelope;

  Json to_json() const;
  static WirePacket from_json(const Json& j);
};

/// Pluggable transport. Implementations throw on delivery failure; the
/// protocol converts that into Error(transport_failure).
class MessageSender {
 public:
  virtual ~MessageSender() = default;
  virtual void send(const WirePacket& packet) = 0;
};

using Clock = std::function<std::int64_t()>;
std::int64_t system_now_ms();

/// One party's view of its negotiations. Each party runs its own replica of
/// every session; local actions transition first and are then sent.
class NegotiationProtocol {
 public:
  NegotiationProtocol(std::string agent_id, crypto::DerivedKeypair agreement_key,
                      MessageSender& transport, Clock clock = system_now_ms,
                      crypto::RandomSource& rng = crypto::system_random());

  const std::string& agent_id() const noexcept { return agent_id_; }
  const crypto::Bytes& public_key() const noexcept { return key_.public_key; }

  void register_peer(const std::string& agent_id, crypto::Bytes x25519_public_key);

  /// Creates a session, applies `offer`, and sends it. Returns the session id.
  std::string start(const std::string& responder, const Json& offer);
  void counter(const std::string& session_id, const Json& payload);
  /// Applies accept locally; the message carries the agreement hash.
  crypto::Hash32 accept(const std::string& session_id);
  void reject(const std::string& session_id, const std::string& reason = {});
  /// Local-only transitions: the commitment and dispute flows live elsewhere.
  void commit(const std::string& session_id, const std::string& commitment_id);
  void dispute(const std::string& session_id);

  /// Decrypts, rejects replays, then drives the session's FSM.
  /// Errors: replay_detected, decrypt_failure, unknown_session, plus the
  /// FSM errors.
  NegotiationMessage receive(const WirePacket& packet);

  std::optional<NegotiationSession> session(const std::string& id) const;

  /// Called after each successfully received message (outside the lock).
  std::function<void(const NegotiationMessage&)> on_message;

 private:
  void send_message(const std::string& session_id, MessageType type, const Json& payload,
                    Event event);
  NegotiationSession& session_ref(const std::string& id);

  std::string agent_id_;
  crypto::DerivedKeypair key_;
  MessageSender& transport_;
  Clock clock_;
  crypto::RandomSource& rng_;

  mutable std::mutex mu_;
  std::map<std::string, crypto::Bytes> peers_;
  std::map<std::string, NegotiationSession> sessions_;
  std::set<std::string> seen_message_ids_;
};

}  // namespace aesp::negotiation
