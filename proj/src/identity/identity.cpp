#include "aesp/identity/identity.hpp"

#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"

namespace aesp::identity {

using crypto::Bytes;
using crypto::from_hex;
using crypto::to_hex;

namespace {

constexpr Capability kAll[] = {Capability::payment,    Capability::negotiation,
                               Capability::data_query, Capability::commitment,
                               Capability::delegation, Capability::arbitration};

}  // namespace

std::string_view to_string(Capability c) noexcept {
  switch (c) {
    case Capability::payment: return "payment";
    case Capability::negotiation: return "negotiation";
    case Capability::data_query: return "data_query";
    case Capability::commitment: return "commitment";
    case Capability::delegation: return "delegation";
    case Capability::arbitration: return "arbitration";
  }
  return "unknown";
}

Capability capability_from_string(std::string_view name) {
  for (auto c : kAll) {
    if (to_string(c) == name) return c;
  }
  throw Error(Errc::invalid_argument, "unknown capability: " + std::string(name));
}

CapabilitySet all_capabilities() { return CapabilitySet(std::begin(kAll), std::end(kAll)); }

std::string agent_id_for(crypto::ByteView public_key) { return to_hex(crypto::sha256(public_key)); }

AgentIdentity derive_agent(const crypto::IdentityRoot& root, std::uint32_t index) {
  AgentIdentity agent;
  agent.index = index;
  agent.keypair = crypto::derive_contextual_keypair(
      root, crypto::Curve::ed25519, "agent-identity:" + std::to_string(index) + ":");
  agent.agent_id = agent_id_for(agent.keypair.public_key);
  agent.did = "did:aesp:" + agent.agent_id;
  return agent;
}

crypto::DerivedKeypair derive_owner_keypair(const crypto::IdentityRoot& root) {
  return crypto::derive_contextual_keypair(root, crypto::Curve::ed25519, "owner:xidentity:");
}

Json IdentityCertificate::signing_fields() const {
  Json caps = Json::array();
  for (auto c : capabilities) caps.push_back(to_string(c));
  return Json{{"version", version},
              {"agent_id", agent_id},
              {"agent_public_key", to_hex(agent_public_key)},
              {"owner_xid", to_hex(owner_xid)},
              {"capabilities", caps},
              {"policy_hash", to_hex(policy_hash)},
              {"max_autonomous_amount", max_autonomous_amount},
              {"chains", chains},
              {"created_at", created_at},
              {"expires_at", expires_at}};
}

Json IdentityCertificate::to_json() const {
  Json j = signing_fields();
  j["owner_signature"] = to_hex(owner_signature);
  return j;
}

IdentityCertificate IdentityCertificate::from_json(const Json& j) {
  try {
    IdentityCertificate c;
    c.version = j.at("version").get<std::string>();
    c.agent_id = j.at("agent_id").get<std::string>();
    c.agent_public_key = from_hex(j.at("agent_public_key").get<std::string>());
    c.owner_xid = from_hex(j.at("owner_xid").get<std::string>());
    for (const auto& cap : j.at("capabilities")) {
      c.capabilities.insert(capability_from_string(cap.get<std::string>()));
    }
    c.policy_hash = from_hex(j.at("policy_hash").get<std::string>());
    c.max_autonomous_amount = j.at("max_autonomous_amount").get<std::int64_t>();
    c.chains = j.at("chains").get<std::vector<std::string>>();
    c.created_at = j.at("created_at").get<std::int64_t>();
    c.expires_at = j.at("expires_at").get<std::int64_t>();
    c.owner_signature = from_hex(j.at("owner_signature").get<std::string>());
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed certificate: ") + e.what());
  }
}

IdentityCertificate issue_certificate(const crypto::DerivedKeypair& owner, const AgentIdentity& agent,
                                      const CapabilitySet& capabilities,
                                      const policy::Policy& policy, std::int64_t max_amount,
                                      std::vector<std::string> chains, std::int64_t validity_ms,
                                      std::int64_t now_ms) {
  if (validity_ms <= 0) throw Error(Errc::invalid_argument, "validity must be positive");
  if (owner.curve != crypto::Curve::ed25519) {
    throw Error(Errc::curve_mismatch, "owner key must be ed25519");
  }
  IdentityCertificate cert;
  cert.agent_id = agent.agent_id;
  cert.agent_public_key = agent.public_key();
  cert.owner_xid = owner.public_key;
  cert.capabilities = capabilities;
  auto h = crypto::sha256(std::string_view(canonical_json(policy.to_json())));
  cert.policy_hash.assign(h.begin(), h.end());
  cert.max_autonomous_amount = max_amount;
  cert.chains = std::move(chains);
  cert.created_at = now_ms;
  cert.expires_at = now_ms + validity_ms;
  auto body = canonical_json(cert.signing_fields());
  cert.owner_signature = crypto::sign(owner, crypto::as_bytes(body)).bytes;
  return cert;
}

std::string_view to_string(CertificateStatus s) noexcept {
  switch (s) {
    case CertificateStatus::valid: return "valid";
    case CertificateStatus::expired: return "expired";
    case CertificateStatus::signature_invalid: return "signature_invalid";
    case CertificateStatus::untrusted_owner: return "untrusted_owner";
  }
  return "unknown";
}

CertificateStatus verify_certificate(const IdentityCertificate& cert,
                                     crypto::ByteView trusted_owner_xid, std::int64_t now_ms) {
  if (!std::equal(cert.owner_xid.begin(), cert.owner_xid.end(), trusted_owner_xid.begin(),
                  trusted_owner_xid.end())) {
    return CertificateStatus::untrusted_owner;
  }
  std::string body;
  try {
    body = canonical_json(cert.signing_fields());
  } catch (const Error&) {
    return CertificateStatus::signature_invalid;
  }
  crypto::Signature sig{crypto::Curve::ed25519, cert.owner_signature};
  if (!crypto::verify(crypto::Curve::ed25519, trusted_owner_xid, crypto::as_bytes(body), sig)) {
    return CertificateStatus::signature_invalid;
  }
  if (now_ms >= cert.expires_at) return CertificateStatus::expired;
  return CertificateStatus::valid;
}

}  // namespace aesp::identity
