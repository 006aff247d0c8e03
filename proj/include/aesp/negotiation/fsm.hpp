#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/constants.hpp"
#include "aesp/crypto/bytes.hpp"
#include "aesp/crypto/canonical_json.hpp"

namespace aesp::negotiation {

enum class State {
  initial,
  offer_sent,
  offer_received,
  countering,
  accepted,
  rejected,
  committed,
  disputed,
};

enum class Event { offer, offer_recv, counter, accept, reject, commit, dispute };

inline constexpr State kAllStates[] = {State::initial,   State::offer_sent, State::offer_received,
                                       State::countering, State::accepted,  State::rejected,
                                       State::committed,  State::disputed};
inline constexpr Event kAllEvents[] = {Event::offer,  Event::offer_recv, Event::counter,
                                       Event::accept, Event::reject,     Event::commit,
                                       Event::dispute};

std::string_view to_string(State s) noexcept;
std::string_view to_string(Event e) noexcept;
State state_from_string(std::string_view name);

/// The transition table; nullopt for pairs outside it.
std::optional<State> next_state(State s, Event e) noexcept;
bool is_terminal(State s) noexcept;

enum class MessageType { offer, counter, accept, reject };
std::string_view to_string(MessageType t) noexcept;  // "negotiation_offer", ...
MessageType message_type_from_string(std::string_view name);

struct Round {
  MessageType type = MessageType::offer;
  Json payload;
  std::string sender;
  std::int64_t timestamp = 0;
};

struct NegotiationSession {
  std::string id;
  std::string initiator_agent;
  std::string responder_agent;
  State state = State::initial;
  std::vector<Round> rounds;
  int round_count = 0;
  int max_rounds = constants::kMaxNegotiationRounds;
  std::int64_t created_at = 0;
  std::int64_t ttl_ms = constants::kNegotiationTtlMs;
  std::optional<crypto::Hash32> agreement_hash;
  std::optional<std::string> reject_reason;
  std::optional<std::string> commitment_id;

  bool expired(std::int64_t now) const noexcept { return now >= created_at + ttl_ms; }
  Json to_json() const;
};

NegotiationSession create_session(std::string id, std::string initiator, std::string responder,
                                  std::int64_t now);

/// Applies one event. offer/offer_recv/counter append a round carrying
/// `payload` and count towards max_rounds; accept fixes the agreement hash;
/// reject may carry a reason string in `payload`. On error the session is
/// left untouched.
///
/// Errors: session_expired, invalid_transition, round_limit_exceeded, no_rounds.
State transition(NegotiationSession& session, Event kind, std::int64_t now,
                 const Json& payload = nullptr, const std::string& sender = {});

/// sha256(canonical_json(payload of the latest offer or counter)).
/// Throws Error(no_rounds) if there is none.
crypto::Hash32 compute_agreement_hash(const NegotiationSession& session);

}  // namespace aesp::negotiation
