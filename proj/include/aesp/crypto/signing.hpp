#pragma once

#include <optional>
#include <string>

#include "aesp/crypto/keys.hpp"

namespace aesp::crypto {

struct Signature {
  Curve curve = Curve::ed25519;
  /// ed25519: 64 bytes. secp256k1: r || s || v with v in {27, 28}; s is low.
  Bytes bytes;

  bool operator==(const Signature&) const = default;
};

/// ed25519 signs `message` directly; secp256k1 signs keccak256(message)
/// with an RFC 6979 nonce. x25519 keys cannot sign (curve_mismatch).
Signature sign(const DerivedKeypair& keypair, ByteView message);
bool verify(Curve curve, ByteView public_key, ByteView message,
            const Signature& signature);

/// secp256k1 only: signs a 32-byte prehash.
Signature sign_digest(const DerivedKeypair& keypair, ByteView digest);
bool verify_digest(ByteView public_key, ByteView digest, const Signature& signature);

/// Returns the compressed public key, or nullopt if the signature is
/// malformed or does not recover.
std::optional<Bytes> recover_public_key(ByteView digest, const Signature& signature);
std::optional<std::string> recover_evm_address(ByteView digest,
                                               const Signature& signature);

/// Derives the secp256k1 key for `ctx` and signs the EIP-712 hash with it.
/// Throws Error(hash_length) unless typed_data_hash is 32 bytes.
Signature sign_typed_data_with_context(const IdentityRoot& root,
                                       std::string_view ctx,
                                       ByteView typed_data_hash);

}  // namespace aesp::crypto
