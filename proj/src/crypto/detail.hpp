#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/secure.hpp"
#include "aesp/crypto/symmetric.hpp"

namespace aesp::crypto::detail {

struct KeyMaterial {
  Curve curve;
  // ed25519: 64-byte libsodium secret key (seed || pk); x25519: 32-byte
  // scalar; secp256k1: 32-byte big-endian scalar; symmetric: raw key.
  SecretBytes secret;
};

struct RootMaterial {
  SecretBytes key;
};

struct KeyAccess {
  static const KeyMaterial& material(const KeyHandle& handle);
  static const KeyMaterial& material(const SymmetricKey& key);
  static const RootMaterial& root(const IdentityRoot& root);

  static IdentityRoot make_root(SecretBytes key);
  static KeyHandle make_handle(Curve curve, SecretBytes secret);
  static SymmetricKey make_symmetric(SecretBytes key);
};

void ensure_sodium();

SecretBytes argon2id(std::string_view password, ByteView salt, std::size_t out_len);

/// HKDF pipeline shared by keypair and symmetric derivation.
SecretBytes derive_context_key(const IdentityRoot& root, std::string_view label,
                               std::string_view ctx);

// secp256k1 arithmetic on top of OpenSSL BIGNUM/EC_POINT.
SecretBytes secp_reduce_scalar(ByteView candidate);
Bytes secp_public_key(ByteView scalar, bool compressed);
/// Returns the 65-byte uncompressed encoding, or nullopt if not on the curve.
std::optional<Bytes> secp_decompress(ByteView public_key);
std::array<std::uint8_t, 65> secp_sign(ByteView scalar, ByteView digest);
std::optional<Bytes> secp_recover(ByteView digest, ByteView signature);

}  // namespace aesp::crypto::detail
