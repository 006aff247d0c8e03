#pragma once

#include <string>
#include <string_view>

#include "aesp/crypto/bytes.hpp"
#include "aesp/crypto/canonical_json.hpp"
#include "aesp/crypto/random.hpp"
#include "aesp/crypto/secure.hpp"

namespace aesp::crypto {

// OpenSSL 3.0 has no AES-GCM-SIV, so sealing uses AES-256-GCM with a random
// 96-bit nonce. The descriptor below travels with every blob so a later
// SIV implementation can coexist.
inline constexpr std::string_view kSealAlgorithm = "argon2id(4MiB,t=3,p=1)/aes-256-gcm";

struct SealedBlob {
  std::string version = "1";
  std::string algorithm;
  Bytes salt;   // 16 bytes
  Bytes nonce;  // 12 bytes
  Bytes ciphertext;

  Json to_json() const;
  static SealedBlob from_json(const Json& j);
};

SealedBlob seal_secret(ByteView secret, std::string_view passphrase,
                       RandomSource& rng = system_random());
/// Throws Error(authentication_failed) for a wrong passphrase or tampering.
SecretBytes unseal_secret(const SealedBlob& blob, std::string_view passphrase);

}  // namespace aesp::crypto
