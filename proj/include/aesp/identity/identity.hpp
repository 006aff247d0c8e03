#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/signing.hpp"
#include "aesp/policy/policy.hpp"

namespace aesp::identity {

enum class Capability { payment, negotiation, data_query, commitment, delegation, arbitration };
using CapabilitySet = std::set<Capability>;

std::string_view to_string(Capability c) noexcept;
Capability capability_from_string(std::string_view name);
CapabilitySet all_capabilities();

struct AgentIdentity {
  std::uint32_t index = 0;
  std::string agent_id;  // hex sha256(public_key)
  std::string did;       // "did:aesp:" + agent_id
  crypto::DerivedKeypair keypair;

  const crypto::Bytes& public_key() const { return keypair.public_key; }
};

/// ed25519 key under context "agent-identity:<index>:".
AgentIdentity derive_agent(const crypto::IdentityRoot& root, std::uint32_t index);

/// The owner's xidentity signing key (ed25519, context "owner:xidentity:").
crypto::DerivedKeypair derive_owner_keypair(const crypto::IdentityRoot& root);

std::string agent_id_for(crypto::ByteView public_key);

struct IdentityCertificate {
  std::string version = "1.0";
  std::string agent_id;
  crypto::Bytes agent_public_key;
  crypto::Bytes owner_xid;
  CapabilitySet capabilities;
  crypto::Bytes policy_hash;  // 32 bytes
  std::int64_t max_autonomous_amount = 0;
  std::vector<std::string> chains;
  std::int64_t created_at = 0;
  std::int64_t expires_at = 0;
  crypto::Bytes owner_signature;

  /// Flat field map without the signature; its canonical JSON is what the
  /// owner signs.
  Json signing_fields() const;
  Json to_json() const;
  static IdentityCertificate from_json(const Json& j);
};

/// Throws Error(invalid_argument) if validity_ms <= 0.
IdentityCertificate issue_certificate(const crypto::DerivedKeypair& owner, const AgentIdentity& agent,
                                      const CapabilitySet& capabilities,
                                      const policy::Policy& policy, std::int64_t max_amount,
                                      std::vector<std::string> chains, std::int64_t validity_ms,
                                      std::int64_t now_ms);

enum class CertificateStatus { valid, expired, signature_invalid, untrusted_owner };
std::string_view to_string(CertificateStatus s) noexcept;

/// Checks owner identity, then signature, then expiry (now < expires_at).
CertificateStatus verify_certificate(const IdentityCertificate& cert,
                                     crypto::ByteView trusted_owner_xid, std::int64_t now_ms);

}  // namespace aesp::identity
