#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aesp {

/// Stable error identifiers. The string form (see to_string) is what the
/// HTTP API and the CLI print, so renaming an enumerator is a wire change.
enum class Errc {
  invalid_argument,
  parse_error,
  // crypto
  payload_length,
  curve_mismatch,
  hash_length,
  invalid_key_handle,
  authentication_failed,
  not_serializable,
  // identity
  depth_exceeded,
  capability_escalation,
  unknown_parent,
  duplicate_agent,
  // policy
  id_mismatch,
  // negotiation
  invalid_transition,
  session_expired,
  round_limit_exceeded,
  no_rounds,
  replay_detected,
  decrypt_failure,
  transport_failure,
  unknown_session,
  // commitment
  invalid_address,
  wrong_state,
  signer_mismatch,
  invalid_lifecycle_transition,
  // review
  agent_frozen,
  unknown_request,
  already_resolved,
  past_deadline,
  tier_violation,
  review_expired,
  // privacy
  colon_in_value,
  unknown_segment,
  missing_tx_id,
  pool_exhausted,
  pool_not_initialized,
  // gateway
  unknown_agent,
  storage_failure,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace aesp
