#include "aesp/error.hpp"

namespace aesp {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "INVALID_ARGUMENT";
    case Errc::parse_error: return "PARSE_ERROR";
    case Errc::payload_length: return "PAYLOAD_LENGTH";
    case Errc::curve_mismatch: return "CURVE_MISMATCH";
    case Errc::hash_length: return "HASH_LENGTH";
    case Errc::invalid_key_handle: return "INVALID_KEY_HANDLE";
    case Errc::authentication_failed: return "AUTHENTICATION_FAILED";
    case Errc::not_serializable: return "NOT_SERIALIZABLE";
    case Errc::depth_exceeded: return "DEPTH_EXCEEDED";
    case Errc::capability_escalation: return "CAPABILITY_ESCALATION";
    case Errc::unknown_parent: return "UNKNOWN_PARENT";
    case Errc::duplicate_agent: return "DUPLICATE_AGENT";
    case Errc::id_mismatch: return "ID_MISMATCH";
    case Errc::invalid_transition: return "INVALID_TRANSITION";
    case Errc::session_expired: return "SESSION_EXPIRED";
    case Errc::round_limit_exceeded: return "ROUND_LIMIT_EXCEEDED";
    case Errc::no_rounds: return "NO_ROUNDS";
    case Errc::replay_detected: return "REPLAY_DETECTED";
    case Errc::decrypt_failure: return "DECRYPT_FAILURE";
    case Errc::transport_failure: return "TRANSPORT_FAILURE";
    case Errc::unknown_session: return "UNKNOWN_SESSION";
    case Errc::invalid_address: return "INVALID_ADDRESS";
    case Errc::wrong_state: return "WRONG_STATE";
    case Errc::signer_mismatch: return "SIGNER_MISMATCH";
    case Errc::invalid_lifecycle_transition: return "INVALID_LIFECYCLE_TRANSITION";
    case Errc::agent_frozen: return "AGENT_FROZEN";
    case Errc::unknown_request: return "UNKNOWN_REQUEST";
    case Errc::already_resolved: return "ALREADY_RESOLVED";
    case Errc::past_deadline: return "PAST_DEADLINE";
    case Errc::tier_violation: return "TIER_VIOLATION";
    case Errc::review_expired: return "REVIEW_EXPIRED";
    case Errc::colon_in_value: return "COLON_IN_VALUE";
    case Errc::unknown_segment: return "UNKNOWN_SEGMENT";
    case Errc::missing_tx_id: return "MISSING_TX_ID";
    case Errc::pool_exhausted: return "POOL_EXHAUSTED";
    case Errc::pool_not_initialized: return "POOL_NOT_INITIALIZED";
    case Errc::unknown_agent: return "UNKNOWN_AGENT";
    case Errc::storage_failure: return "STORAGE_FAILURE";
  }
  return "UNKNOWN";
}

}  // namespace aesp
