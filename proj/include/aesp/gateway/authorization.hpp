#pragma once

#include <string>
#include <string_view>

#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/signing.hpp"
#include "aesp/policy/policy.hpp"

namespace aesp::gateway {

/// canonical_json({"action": action, "decision_id": id}); the bytes that the
/// authorization signature covers.
std::string authorization_message(const policy::ActionRequest& action, std::string_view decision_id);

/// "authorize:<agent_id>:"
std::string authorization_context(std::string_view agent_id);

crypto::Signature sign_authorization(const crypto::IdentityRoot& root, const policy::ActionRequest& action,
                                     std::string_view decision_id);
bool verify_authorization(const crypto::IdentityRoot& root, const policy::ActionRequest& action,
                          std::string_view decision_id, const crypto::Signature& signature);

}  // namespace aesp::gateway
