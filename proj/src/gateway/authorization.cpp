#include "aesp/gateway/authorization.hpp"

#include "aesp/crypto/canonical_json.hpp"

namespace aesp::gateway {

std::string authorization_message(const policy::ActionRequest& action, std::string_view decision_id) {
  return canonical_json(Json{{"action", action.to_json()}, {"decision_id", std::string(decision_id)}});
}

std::string authorization_context(std::string_view agent_id) {
  return "authorize:" + std::string(agent_id) + ":";
}

crypto::Signature sign_authorization(const crypto::IdentityRoot& root, const policy::ActionRequest& action,
                                     std::string_view decision_id) {
  auto kp = crypto::derive_contextual_keypair(root, crypto::Curve::ed25519,
                                              authorization_context(action.agent_id));
  return crypto::sign(kp, crypto::as_bytes(authorization_message(action, decision_id)));
}

bool verify_authorization(const crypto::IdentityRoot& root, const policy::ActionRequest& action,
                          std::string_view decision_id, const crypto::Signature& signature) {
  auto kp = crypto::derive_contextual_keypair(root, crypto::Curve::ed25519,
                                              authorization_context(action.agent_id));
  return crypto::verify(crypto::Curve::ed25519, kp.public_key,
                        crypto::as_bytes(authorization_message(action, decision_id)), signature);
}

}  // namespace aesp::gateway
