#include "aesp/negotiation/fsm.hpp"

#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"

namespace aesp::negotiation {

std::string_view to_string(State s) noexcept {
  switch (s) {
    case State::initial: return "initial";
    case State::offer_sent: return "offer_sent";
    case State::offer_received: return "offer_received";
    case State::countering: return "countering";
    case State::accepted: return "accepted";
    case State::rejected: return "rejected";
    case State::committed: return "committed";
    case State::disputed: return "disputed";
  }
  return "unknown";
}

std::string_view to_string(Event e) noexcept {
  switch (e) {
    case Event::offer: return "offer";
    case Event::offer_recv: return "offer_recv";
    case Event::counter: return "counter";
    case Event::accept: return "accept";
    case Event::reject: return "reject";
    case Event::commit: return "commit";
    case Event::dispute: return "dispute";
  }
  return "unknown";
}

State state_from_string(std::string_view name) {
  for (auto s : kAllStates) {
    if (to_string(s) == name) return s;
  }
  throw Error(Errc::parse_error, "unknown negotiation state: " + std::string(name));
}

std::optional<State> next_state(State s, Event e) noexcept {
  switch (s) {
    case State::initial:
      if (e == Event::offer) return State::offer_sent;
      if (e == Event::offer_recv) return State::offer_received;
      break;
    case State::offer_sent:
    case State::offer_received:
    case State::countering:
      if (e == Event::counter) return State::countering;
      if (e == Event::accept) return State::accepted;
      if (e == Event::reject) return State::rejected;
      break;
    case State::accepted:
      if (e == Event::commit) return State::committed;
      break;
    case State::committed:
      if (e == Event::dispute) return State::disputed;
      break;
    case State::rejected:
    case State::disputed:
      break;
  }
  return std::nullopt;
}

bool is_terminal(State s) noexcept { return s == State::rejected || s == State::disputed; }

std::string_view to_string(MessageType t) noexcept {
  switch (t) {
    case MessageType::offer: return "negotiation_offer";
    case MessageType::counter: return "negotiation_counter";
    case MessageType::accept: return "negotiation_accept";
    case MessageType::reject: return "negotiation_reject";
  }
  return "unknown";
}

MessageType message_type_from_string(std::string_view name) {
  for (auto t : {MessageType::offer, MessageType::counter, MessageType::accept, MessageType::reject}) {
    if (to_string(t) == name) return t;
  }
  throw Error(Errc::parse_error, "unknown message type: " + std::string(name));
}

Json NegotiationSession::to_json() const {
  Json rs = Json::array();
  for (const auto& r : rounds) {
    rs.push_back({{"type", to_string(r.type)},
                  {"payload", r.payload},
                  {"sender", r.sender},
                  {"timestamp", r.timestamp}});
  }
  return Json{{"id", id},
              {"initiator_agent", initiator_agent},
              {"responder_agent", responder_agent},
              {"state", to_string(state)},
              {"rounds", rs},
              {"round_count", round_count},
              {"max_rounds", max_rounds},
              {"created_at", created_at},
              {"ttl_ms", ttl_ms},
              {"agreement_hash", agreement_hash ? Json(crypto::to_hex(*agreement_hash)) : Json()},
              {"reject_reason", reject_reason ? Json(*reject_reason) : Json()},
              {"commitment_id", commitment_id ? Json(*commitment_id) : Json()}};
}

NegotiationSession create_session(std::string id, std::string initiator, std::string responder,
                                  std::int64_t now) {
  NegotiationSession s;
  s.id = std::move(id);
  s.initiator_agent = std::move(initiator);
  s.responder_agent = std::move(responder);
  s.created_at = now;
  return s;
}

crypto::Hash32 compute_agreement_hash(const NegotiationSession& session) {
  for (auto it = session.rounds.rbegin(); it != session.rounds.rend(); ++it) {
    if (it->type == MessageType::offer || it->type == MessageType::counter) {
      return crypto::sha256(std::string_view(canonical_json(it->payload)));
    }
  }
  throw Error(Errc::no_rounds, "session " + session.id + " has no offer or counter");
}

State transition(NegotiationSession& session, Event kind, std::int64_t now, const Json& payload,
                 const std::string& sender) {
  if (session.expired(now)) {
    throw Error(Errc::session_expired, "session " + session.id + " expired");
  }
  auto next = next_state(session.state, kind);
  if (!next) {
    throw Error(Errc::invalid_transition, "no transition from " +
                                              std::string(to_string(session.state)) + " on " +
                                              std::string(to_string(kind)));
  }
  const bool counts = kind == Event::offer || kind == Event::offer_recv || kind == Event::counter;
  if (counts && session.round_count >= session.max_rounds) {
    throw Error(Errc::round_limit_exceeded,
                "session " + session.id + " reached " + std::to_string(session.max_rounds) +
                    " rounds");
  }

  switch (kind) {
    case Event::offer:
    case Event::offer_recv:
    case Event::counter:
      session.rounds.push_back(
          {kind == Event::counter ? MessageType::counter : MessageType::offer, payload, sender, now});
      ++session.round_count;
      break;
    case Event::accept:
      session.agreement_hash = compute_agreement_hash(session);  // may throw no_rounds
      session.rounds.push_back({MessageType::accept, Json(crypto::to_hex(*session.agreement_hash)),
                                sender, now});
      break;
    case Event::reject:
      if (payload.is_string()) session.reject_reason = payload.get<std::string>();
      session.rounds.push_back({MessageType::reject, payload, sender, now});
      break;
    case Event::commit:
      if (payload.is_string()) session.commitment_id = payload.get<std::string>();
      break;
    case Event::dispute:
      break;
  }
  session.state = *next;
  return session.state;
}

}  // namespace aesp::negotiation
