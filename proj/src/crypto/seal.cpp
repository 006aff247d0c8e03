#include "aesp/crypto/seal.hpp"

#include "aesp/crypto/symmetric.hpp"
#include "aesp/error.hpp"
#include "detail.hpp"

namespace aesp::crypto {

namespace {

SymmetricKey passphrase_key(std::string_view passphrase, ByteView salt) {
  return detail::KeyAccess::make_symmetric(detail::argon2id(passphrase, salt, 32));
}

std::string associated_data(const SealedBlob& blob) { return blob.version + "|" + blob.algorithm; }

}  // namespace

Json SealedBlob::to_json() const {
  return Json{{"version", version},
              {"algorithm", algorithm},
              {"salt", to_base64(salt)},
              {"nonce", to_base64(nonce)},
              {"ciphertext", to_base64(ciphertext)}};
}

SealedBlob SealedBlob::from_json(const Json& j) {
  try {
    SealedBlob blob;
    blob.version = j.at("version").get<std::string>();
    blob.algorithm = j.at("algorithm").get<std::string>();
    blob.salt = from_base64(j.at("salt").get<std::string>());
    blob.nonce = from_base64(j.at("nonce").get<std::string>());
    blob.ciphertext = from_base64(j.at("ciphertext").get<std::string>());
    return blob;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed sealed blob: ") + e.what());
  }
}

SealedBlob seal_secret(ByteView secret, std::string_view passphrase, RandomSource& rng) {
  SealedBlob blob;
  blob.algorithm = std::string(kSealAlgorithm);
  blob.salt.resize(16);
  rng.fill(blob.salt);
  blob.nonce.resize(kGcmNonceSize);
  rng.fill(blob.nonce);
  auto key = passphrase_key(passphrase, blob.salt);
  auto aad = associated_data(blob);
  blob.ciphertext = aes_gcm_encrypt(key, blob.nonce, secret, as_bytes(aad));
  return blob;
}

SecretBytes unseal_secret(const SealedBlob& blob, std::string_view passphrase) {
  if (blob.algorithm != kSealAlgorithm || blob.salt.size() != 16) {
    throw Error(Errc::authentication_failed, "unsupported sealed blob");
  }
  auto key = passphrase_key(passphrase, blob.salt);
  auto aad = associated_data(blob);
  Bytes plain = aes_gcm_decrypt(key, blob.nonce, blob.ciphertext, as_bytes(aad));
  SecretBytes out(plain);
  secure_wipe(plain);
  return out;
}

}  // namespace aesp::crypto
