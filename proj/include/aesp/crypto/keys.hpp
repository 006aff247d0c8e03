#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "aesp/crypto/bytes.hpp"

namespace aesp::crypto {

namespace detail {
struct KeyMaterial;
struct RootMaterial;
struct KeyAccess;
}  // namespace detail

enum class Curve { ed25519, secp256k1, x25519 };

std::string_view to_string(Curve curve) noexcept;
/// Throws Error(invalid_argument) for unknown names.
Curve curve_from_string(std::string_view name);

/// The 32-byte REV payload plus the owner's passphrase domain. The first 16
/// payload bytes are the Argon2id salt; the remaining 16 are the entropy field.
struct MasterCredential {
  Bytes rev_payload;
  std::string passphrase_domain;
};

/// Root of all derived keys. Cheap to copy (shared, immutable); there is no
/// accessor for the secret.
class IdentityRoot {
 public:
  IdentityRoot() = default;
  bool valid() const noexcept { return material_ != nullptr; }

  /// SHA-256 of the root; lets tests and callers compare roots without
  /// exposing them.
  Hash32 fingerprint() const;

 private:
  friend struct detail::KeyAccess;
  explicit IdentityRoot(std::shared_ptr<const detail::RootMaterial> material)
      : material_(std::move(material)) {}
  std::shared_ptr<const detail::RootMaterial> material_;
};

/// Opaque reference to a private key. Only the sign/agree functions in this
/// module can dereference it.
class KeyHandle {
 public:
  KeyHandle() = default;
  bool valid() const noexcept { return material_ != nullptr; }

 private:
  friend struct detail::KeyAccess;
  explicit KeyHandle(std::shared_ptr<const detail::KeyMaterial> material)
      : material_(std::move(material)) {}
  std::shared_ptr<const detail::KeyMaterial> material_;
};

struct DerivedKeypair {
  Curve curve = Curve::ed25519;
  /// 32 bytes for ed25519/x25519, 33-byte compressed point for secp256k1.
  Bytes public_key;
  KeyHandle handle;
};

/// root = HKDF(Argon2id(passphrase_domain, payload[0..16)), "acegf:identity:root").
/// Throws Error(payload_length) unless the payload is exactly 32 bytes.
IdentityRoot derive_identity_root(const MasterCredential& credential);

/// prk = HKDF-Extract("", root); dk = HKDF-Expand(prk,
/// "ACEGF-REV32-V1-" || curve || ":" || ctx, 32), then mapped to a valid
/// secret for the curve (ed25519 seed, clamped x25519 scalar, secp256k1
/// scalar mod n).
DerivedKeypair derive_contextual_keypair(const IdentityRoot& root, Curve curve,
                                         std::string_view ctx);

/// Wraps an externally supplied secret (ed25519 seed, x25519 scalar, or
/// big-endian secp256k1 scalar). Used for fixed test keys and imports.
DerivedKeypair import_keypair(Curve curve, ByteView secret);

enum class AddressNamespace { evm, ed25519_chain };

/// evm: EIP-55 checksummed 0x address of keccak(uncompressed pk)[12..32).
/// ed25519_chain: base58 of the 32-byte public key.
/// Throws Error(curve_mismatch) if the namespace does not fit the curve.
std::string address_for(const DerivedKeypair& keypair, AddressNamespace ns);

/// Accepts a 33-byte compressed or 65-byte uncompressed secp256k1 key.
std::string evm_address_from_public_key(ByteView public_key);
std::string to_checksum_address(ByteView address20);
/// True for "0x" followed by 40 hex digits (any case).
bool is_evm_address(std::string_view text);

}  // namespace aesp::crypto
