#include "aesp/crypto/envelope.hpp"

#include "aesp/constants.hpp"
#include "aesp/crypto/symmetric.hpp"
#include "aesp/error.hpp"

namespace aesp::crypto {

namespace {

std::string associated_data(const EncryptedEnvelope& env) {
  return canonical_json(Json{{"algorithm", env.algorithm},
                             {"message_id", env.message_id},
                             {"timestamp", env.timestamp},
                             {"version", env.version}});
}

void require_x25519(const DerivedKeypair& kp) {
  if (kp.curve != Curve::x25519) {
    throw Error(Errc::curve_mismatch, "envelopes need x25519 keys");
  }
}

}  // namespace

Json EncryptedEnvelope::to_json() const {
  return Json{{"version", version},       {"algorithm", algorithm},
              {"ciphertext", ciphertext}, {"nonce", to_base64(nonce)},
              {"message_id", message_id}, {"timestamp", timestamp}};
}

EncryptedEnvelope EncryptedEnvelope::from_json(const Json& j) {
  try {
    EncryptedEnvelope env;
    env.version = j.at("version").get<std::string>();
    env.algorithm = j.at("algorithm").get<std::string>();
    env.ciphertext = j.at("ciphertext").get<std::string>();
    env.nonce = from_base64(j.at("nonce").get<std::string>());
    env.message_id = j.at("message_id").get<std::string>();
    env.timestamp = j.at("timestamp").get<std::int64_t>();
    return env;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed envelope: ") + e.what());
  }
}

EncryptedEnvelope agree_and_encrypt(const DerivedKeypair& sender,
                                    ByteView recipient_public_key, ByteView plaintext,
                                    std::int64_t now_ms, RandomSource& rng,
                                    std::string message_id) {
  require_x25519(sender);
  auto key = agree(sender, recipient_public_key, constants::kNegotiationKeyLabel);
  EncryptedEnvelope env;
  env.version = std::string(kEnvelopeVersion);
  env.algorithm = std::string(kEnvelopeAlgorithm);
  env.message_id = message_id.empty() ? new_uuid(rng) : std::move(message_id);
  env.timestamp = now_ms;
  env.nonce.resize(kGcmNonceSize);
  rng.fill(env.nonce);
  auto aad = associated_data(env);
  env.ciphertext = to_base64(aes_gcm_encrypt(key, env.nonce, plaintext, as_bytes(aad)));
  return env;
}

Bytes decrypt(const DerivedKeypair& recipient, ByteView sender_public_key,
              const EncryptedEnvelope& envelope) {
  require_x25519(recipient);
  if (envelope.version != kEnvelopeVersion || envelope.algorithm != kEnvelopeAlgorithm) {
    throw Error(Errc::authentication_failed, "unsupported envelope version or algorithm");
  }
  Bytes sealed;
  try {
    sealed = from_base64(envelope.ciphertext);
  } catch (const Error&) {
    throw Error(Errc::authentication_failed, "envelope ciphertext is not base64");
  }
  auto key = agree(recipient, sender_public_key, constants::kNegotiationKeyLabel);
  auto aad = associated_data(envelope);
  return aes_gcm_decrypt(key, envelope.nonce, sealed, as_bytes(aad));
}

}  // namespace aesp::crypto
