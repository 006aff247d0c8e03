#pragma once

#include <cstdint>
#include <string>

#include "aesp/crypto/canonical_json.hpp"
#include "aesp/crypto/keys.hpp"
#include "aesp/crypto/random.hpp"

namespace aesp::crypto {

inline constexpr std::string_view kEnvelopeVersion = "aesp-neg/1";
inline constexpr std::string_view kEnvelopeAlgorithm =
    "X25519-HKDF-SHA256/AES-256-GCM";

struct EncryptedEnvelope {
  std::string version;
  std::string algorithm;
  std::string ciphertext;  // base64 of ciphertext || tag
  Bytes nonce;
  std::string message_id;
  std::int64_t timestamp = 0;  // ms since epoch, UTC

  Json to_json() const;
  static EncryptedEnvelope from_json(const Json& j);
};

/// ECDH between sender and recipient, key = HKDF-Expand(shared,
/// "aesp:negotiation:v1", 32), AES-256-GCM with a fresh 12-byte nonce.
/// Version, message id and timestamp are bound as associated data. An empty
/// message_id draws a fresh UUID from rng.
EncryptedEnvelope agree_and_encrypt(const DerivedKeypair& sender,
                                    ByteView recipient_public_key,
                                    ByteView plaintext, std::int64_t now_ms,
                                    RandomSource& rng = system_random(),
                                    std::string message_id = {});

/// Throws Error(authentication_failed) if anything in the envelope was
/// altered, Error(curve_mismatch) for non-x25519 keys.
Bytes decrypt(const DerivedKeypair& recipient, ByteView sender_public_key,
              const EncryptedEnvelope& envelope);

}  // namespace aesp::crypto
