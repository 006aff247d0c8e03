#include "aesp/negotiation/protocol.hpp"

#include <chrono>

#include "aesp/error.hpp"

namespace aesp::negotiation {

std::int64_t system_now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

Json NegotiationMessage::to_json() const {
  return Json{{"type", to_string(type)},        {"session_id", session_id},
              {"payload", payload},             {"sender_agent", sender_agent},
              {"message_id", message_id},       {"timestamp", timestamp}};
}

NegotiationMessage NegotiationMessage::from_json(const Json& j) {
  try {
    NegotiationMessage m;
    m.type = message_type_from_string(j.at("type").get<std::string>());
    m.session_id = j.at("session_id").get<std::string>();
    m.payload = j.value("payload", Json());
    m.sender_agent = j.at("sender_agent").get<std::string>();
    m.message_id = j.at("message_id").get<std::string>();
    m.timestamp = j.at("timestamp").get<std::int64_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed negotiation message: ") + e.what());
  }
}

Json WirePacket::to_json() const {
  return Json{{"from", from_agent}, {"to", to_agent}, {"envelope", envelope.to_json()}};
}

WirePacket WirePacket::from_json(const Json& j) {
  try {
    return WirePacket{j.at("from").get<std::string>(), j.at("to").get<std::string>(),
                      crypto::EncryptedEnvelope::from_json(j.at("envelope"))};
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed packet: ") + e.what());
  }
}

NegotiationProtocol::NegotiationProtocol(std::string agent_id, crypto::DerivedKeypair agreement_key,
                                         MessageSender& transport, Clock clock,
                                         crypto::RandomSource& rng)
    : agent_id_(std::move(agent_id)),
      key_(std::move(agreement_key)),
      transport_(transport),
      clock_(std::move(clock)),
      rng_(rng) {
  if (key_.curve != crypto::Curve::x25519) {
    throw Error(Errc::curve_mismatch, "negotiation needs an x25519 agreement key");
  }
}

void NegotiationProtocol::register_peer(const std::string& agent_id, crypto::Bytes x25519_public_key) {
  std::lock_guard lock(mu_);
  peers_[agent_id] = std::move(x25519_public_key);
}

NegotiationSession& NegotiationProtocol::session_ref(const std::string& id) {
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw Error(Errc::unknown_session, "unknown session: " + id);
  return it->second;
}

std::optional<NegotiationSession> NegotiationProtocol::session(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

void NegotiationProtocol::send_message(const std::string& session_id, MessageType type,
                                       const Json& payload, Event event) {
  WirePacket packet;
  NegotiationSession before;
  {
    std::lock_guard lock(mu_);
    auto& s = session_ref(session_id);
    const std::string& peer = s.initiator_agent == agent_id_ ? s.responder_agent : s.initiator_agent;
    auto pk = peers_.find(peer);
    if (pk == peers_.end()) throw Error(Errc::unknown_agent, "no agreement key for " + peer);

    before = s;
    const auto now = clock_();
    transition(s, event, now, payload, agent_id_);

    NegotiationMessage msg;
    msg.type = type;
    msg.session_id = session_id;
    msg.payload = type == MessageType::accept
                      ? Json{{"agreement_hash", crypto::to_hex(*s.agreement_hash)}}
                      : payload;
    msg.sender_agent = agent_id_;
    msg.message_id = crypto::new_uuid(rng_);
    msg.timestamp = now;
    auto body = canonical_json(msg.to_json());
    try {
      packet.envelope = crypto::agree_and_encrypt(key_, pk->second, crypto::as_bytes(body), now,
                                                  rng_, msg.message_id);
    } catch (...) {
      s = before;
      throw;
    }
    packet.from_agent = agent_id_;
    packet.to_agent = peer;
  }
  // Sent without the lock: a synchronous transport may call back into us.
  try {
    transport_.send(packet);
  } catch (const std::exception& e) {
    std::lock_guard lock(mu_);
    sessions_[session_id] = before;
    throw Error(Errc::transport_failure, std::string("send failed: ") + e.what());
  }
}

std::string NegotiationProtocol::start(const std::string& responder, const Json& offer) {
  std::string id = crypto::new_uuid(rng_);
  {
    std::lock_guard lock(mu_);
    sessions_.emplace(id, create_session(id, agent_id_, responder, clock_()));
  }
  try {
    send_message(id, MessageType::offer, offer, Event::offer);
  } catch (...) {
    std::lock_guard lock(mu_);
    sessions_.erase(id);
    throw;
  }
  return id;
}

void NegotiationProtocol::counter(const std::string& session_id, const Json& payload) {
  send_message(session_id, MessageType::counter, payload, Event::counter);
}

crypto::Hash32 NegotiationProtocol::accept(const std::string& session_id) {
  send_message(session_id, MessageType::accept, nullptr, Event::accept);
  std::lock_guard lock(mu_);
  return *session_ref(session_id).agreement_hash;
}

void NegotiationProtocol::reject(const std::string& session_id, const std::string& reason) {
  send_message(session_id, MessageType::reject, reason.empty() ? Json() : Json(reason),
               Event::reject);
}

void NegotiationProtocol::commit(const std::string& session_id, const std::string& commitment_id) {
  std::lock_guard lock(mu_);
  transition(session_ref(session_id), Event::commit, clock_(), commitment_id, agent_id_);
}

void NegotiationProtocol::dispute(const std::string& session_id) {
  std::lock_guard lock(mu_);
  transition(session_ref(session_id), Event::dispute, clock_(), nullptr, agent_id_);
}

NegotiationMessage NegotiationProtocol::receive(const WirePacket& packet) {
  NegotiationMessage msg;
  {
    std::lock_guard lock(mu_);
    if (packet.to_agent != agent_id_) {
      throw Error(Errc::decrypt_failure, "packet addressed to " + packet.to_agent);
    }
    auto pk = peers_.find(packet.from_agent);
    if (pk == peers_.end()) {
      throw Error(Errc::decrypt_failure, "no agreement key for " + packet.from_agent);
    }
    crypto::Bytes plain;
    try {
      plain = crypto::decrypt(key_, pk->second, packet.envelope);
      msg = NegotiationMessage::from_json(parse_json(std::string(plain.begin(), plain.end())));
    } catch (const Error& e) {
      throw Error(Errc::decrypt_failure, e.what());
    }
    if (msg.message_id != packet.envelope.message_id || msg.sender_agent != packet.from_agent) {
      throw Error(Errc::decrypt_failure, "message header does not match its envelope");
    }
    if (!seen_message_ids_.insert(msg.message_id).second) {
      throw Error(Errc::replay_detected, "duplicate message id " + msg.message_id);
    }

    const auto now = clock_();
    auto it = sessions_.find(msg.session_id);
    if (it == sessions_.end()) {
      if (msg.type != MessageType::offer) {
        throw Error(Errc::unknown_session, "unknown session: " + msg.session_id);
      }
      // Responder replica; shares the initiator's creation time so both
      // replicas expire together.
      auto fresh = create_session(msg.session_id, msg.sender_agent, agent_id_, msg.timestamp);
      transition(fresh, Event::offer_recv, now, msg.payload, msg.sender_agent);
      sessions_.emplace(msg.session_id, std::move(fresh));
    } else {
      auto& s = it->second;
      if (msg.sender_agent != s.initiator_agent && msg.sender_agent != s.responder_agent) {
        throw Error(Errc::invalid_argument, "sender is not part of session " + s.id);
      }
      auto copy = s;
      switch (msg.type) {
        case MessageType::offer:
          transition(copy, Event::offer_recv, now, msg.payload, msg.sender_agent);
          break;
        case MessageType::counter:
          transition(copy, Event::counter, now, msg.payload, msg.sender_agent);
          break;
        case MessageType::accept: {
          transition(copy, Event::accept, now, nullptr, msg.sender_agent);
          auto claimed = msg.payload.is_object() ? msg.payload.value("agreement_hash", "") : "";
          if (claimed != crypto::to_hex(*copy.agreement_hash)) {
            throw Error(Errc::invalid_argument, "peer agreement hash differs from local replica");
          }
          break;
        }
        case MessageType::reject:
          transition(copy, Event::reject, now, msg.payload, msg.sender_agent);
          break;
      }
      s = std::move(copy);
    }
  }
  if (on_message) on_message(msg);
  return msg;
}

}  // namespace aesp::negotiation
