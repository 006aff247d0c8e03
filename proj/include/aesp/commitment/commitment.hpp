#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "aesp/crypto/canonical_json.hpp"
#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/crypto/signing.hpp"

namespace aesp::commitment {

enum class CommitmentState {
  draft,
  proposed,
  buyer_signed,
  fully_signed,
  escrowed,
  delivered,
  completed,
  disputed,
  cancelled,
};

enum class LifecycleEvent { escrow_funded, delivered, released, dispute, cancel };
enum class Role { buyer, seller };

inline constexpr CommitmentState kAllCommitmentStates[] = {
    CommitmentState::draft,     CommitmentState::proposed,  CommitmentState::buyer_signed,
    CommitmentState::fully_signed, CommitmentState::escrowed, CommitmentState::delivered,
    CommitmentState::completed, CommitmentState::disputed,  CommitmentState::cancelled};
inline constexpr LifecycleEvent kAllLifecycleEvents[] = {
    LifecycleEvent::escrow_funded, LifecycleEvent::delivered, LifecycleEvent::released,
    LifecycleEvent::dispute, LifecycleEvent::cancel};

std::string_view to_string(CommitmentState s) noexcept;
std::string_view to_string(LifecycleEvent e) noexcept;
std::string_view to_string(Role r) noexcept;
CommitmentState commitment_state_from_string(std::string_view name);

/// Post-signing lifecycle table; nullopt outside it.
std::optional<CommitmentState> lifecycle_next(CommitmentState s, LifecycleEvent e) noexcept;

/// The nine-field typed value. uint256 fields are decimal strings.
struct CommitmentValue {
  std::string buyer_agent;
  std::string seller_agent;
  std::string item;
  std::string price;
  std::string currency;
  std::string delivery_deadline;  // seconds since epoch
  std::string arbitrator;
  bool escrow_required = false;
  std::string nonce;

  /// camelCase keys as in the typed-data struct.
  Json to_json() const;
  static CommitmentValue from_json(const Json& j);
};

struct Eip712Domain {
  std::string name;
  std::string version;
  std::int64_t chain_id = 1;
  Json to_json() const;
};

struct CommitmentMetadata {
  std::optional<std::string> escrow_tx;
  std::optional<std::string> delivery_hash;
  std::optional<std::string> release_tx;
};

struct CommitmentRecord {
  std::string id;
  CommitmentValue value;
  Eip712Domain domain;
  CommitmentState state = CommitmentState::draft;
  crypto::Hash32 commitment_hash{};
  std::optional<crypto::Signature> buyer_signature;
  std::optional<crypto::Signature> seller_signature;
  std::optional<crypto::Hash32> agreement_hash;
  CommitmentMetadata metadata;

  Json to_json() const;
  static CommitmentRecord from_json(const Json& j);
};

/// Random nonzero 256-bit nonce as a decimal string.
std::string random_nonce(crypto::RandomSource& rng = crypto::system_random());

/// Decimal string <-> 32-byte big-endian. Throws invalid_argument on
/// non-digits or overflow.
crypto::Hash32 uint256_from_decimal(std::string_view decimal);
std::string uint256_to_decimal(crypto::ByteView be32);

/// Validates and normalizes the value (addresses to EIP-55, canonical
/// decimals), then computes commitment_hash.
/// Errors: invalid_address, invalid_argument.
CommitmentRecord build(std::int64_t chain_id, CommitmentValue value,
                       std::optional<crypto::Hash32> agreement_hash = std::nullopt,
                       std::string id = {});

/// sha256(canonical_json({"domain": D, "value": V})).
crypto::Hash32 commitment_hash(const Eip712Domain& domain, const CommitmentValue& value);
/// keccak256(0x19 0x01 || domainSeparator || structHash).
crypto::Hash32 eip712_digest(const Eip712Domain& domain, const CommitmentValue& value);
inline crypto::Hash32 eip712_digest(const CommitmentRecord& r) {
  return eip712_digest(r.domain, r.value);
}

/// draft -> proposed. Error: wrong_state.
CommitmentRecord propose(const CommitmentRecord& record);

/// Signs the EIP-712 digest with the key derived for ctx. Buyer signs in
/// proposed, seller in buyer_signed. Errors: wrong_state, signer_mismatch.
CommitmentRecord sign_as(const CommitmentRecord& record, Role role, const crypto::IdentityRoot& root,
                         std::string_view ctx);

/// Attaches an externally produced signature (same checks as sign_as).
CommitmentRecord attach_signature(const CommitmentRecord& record, Role role,
                                  const crypto::Signature& signature);

/// True if every stored signature recovers to its declared party, and
/// fully_signed-or-later records carry both.
bool verify_signatures(const CommitmentRecord& record);

/// Errors: invalid_lifecycle_transition.
CommitmentRecord advance(const CommitmentRecord& record, LifecycleEvent event,
                         const CommitmentMetadata& metadata = {});

/// Context string for a party's commitment key.
std::string signing_context(std::string_view commitment_id, Role role);
/// EVM address of the key a party would sign with under ctx.
std::string contextual_address(const crypto::IdentityRoot& root, std::string_view ctx);

}  // namespace aesp::commitment
