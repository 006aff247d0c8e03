#pragma once

#include <memory>
#include <string_view>

#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/random.hpp"

namespace aesp::crypto {

/// 256-bit AEAD key held behind an opaque handle.
class SymmetricKey {
 public:
  SymmetricKey() = default;
  bool valid() const noexcept { return material_ != nullptr; }
  Hash32 fingerprint() const;

 private:
  friend struct detail::KeyAccess;
  explicit SymmetricKey(std::shared_ptr<const detail::KeyMaterial> material)
      : material_(std::move(material)) {}
  std::shared_ptr<const detail::KeyMaterial> material_;
};

/// Same pipeline as derive_contextual_keypair with the pseudo-curve label
/// "aead", yielding a raw 32-byte key.
SymmetricKey derive_symmetric_key(const IdentityRoot& root, std::string_view ctx);

/// X25519 shared secret expanded with HKDF-Expand(shared, label, 32).
SymmetricKey agree(const DerivedKeypair& own, ByteView peer_public_key,
                   std::string_view label);

inline constexpr std::size_t kGcmNonceSize = 12;
inline constexpr std::size_t kGcmTagSize = 16;

/// AES-256-GCM. Output layout: ciphertext || 16-byte tag.
Bytes aes_gcm_encrypt(const SymmetricKey& key, ByteView nonce, ByteView plaintext,
                      ByteView aad);
/// Throws Error(authentication_failed) on tag mismatch.
Bytes aes_gcm_decrypt(const SymmetricKey& key, ByteView nonce, ByteView sealed,
                      ByteView aad);

/// Convenience: fresh nonce from rng, output nonce || ciphertext || tag.
Bytes aead_seal(const SymmetricKey& key, ByteView plaintext, ByteView aad,
                RandomSource& rng);
Bytes aead_open(const SymmetricKey& key, ByteView sealed, ByteView aad);

}  // namespace aesp::crypto
