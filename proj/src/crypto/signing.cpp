#include "aesp/crypto/signing.hpp"

#include <sodium.h>

#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"
#include "detail.hpp"

namespace aesp::crypto {

using detail::KeyAccess;

namespace {

Signature sign_secp_digest(const detail::KeyMaterial& key, ByteView digest) {
  auto raw = detail::secp_sign(key.secret.span(), digest);
  return Signature{Curve::secp256k1, Bytes(raw.begin(), raw.end())};
}

}  // namespace

Signature sign(const DerivedKeypair& keypair, ByteView message) {
  const auto& key = KeyAccess::material(keypair.handle);
  switch (key.curve) {
    case Curve::ed25519: {
      detail::ensure_sodium();
      Bytes sig(crypto_sign_BYTES);
      crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(),
                           key.secret.data());
      return Signature{Curve::ed25519, std::move(sig)};
    }
    case Curve::secp256k1: {
      Hash32 digest = keccak256(message);
      return sign_secp_digest(key, digest);
    }
    case Curve::x25519:
      break;
  }
  throw Error(Errc::curve_mismatch, "x25519 keys cannot sign");
}

Signature sign_digest(const DerivedKeypair& keypair, ByteView digest) {
  const auto& key = KeyAccess::material(keypair.handle);
  if (key.curve != Curve::secp256k1) {
    throw Error(Errc::curve_mismatch, "prehash signing is secp256k1 only");
  }
  if (digest.size() != 32) throw Error(Errc::hash_length, "digest must be 32 bytes");
  return sign_secp_digest(key, digest);
}

bool verify_digest(ByteView public_key, ByteView digest, const Signature& signature) {
  if (signature.curve != Curve::secp256k1 || signature.bytes.size() != 65 ||
      digest.size() != 32) {
    return false;
  }
  auto expected = detail::secp_decompress(public_key);
  if (!expected) return false;
  auto recovered = recover_public_key(digest, signature);
  if (!recovered) return false;
  auto full = detail::secp_decompress(*recovered);
  return full && *full == *expected;
}

bool verify(Curve curve, ByteView public_key, ByteView message,
            const Signature& signature) {
  if (signature.curve != curve) return false;
  switch (curve) {
    case Curve::ed25519:
      detail::ensure_sodium();
      if (public_key.size() != crypto_sign_PUBLICKEYBYTES ||
          signature.bytes.size() != crypto_sign_BYTES) {
        return false;
      }
      return crypto_sign_verify_detached(signature.bytes.data(), message.data(),
                                         message.size(), public_key.data()) == 0;
    case Curve::secp256k1: {
      Hash32 digest = keccak256(message);
      return verify_digest(public_key, digest, signature);
    }
    case Curve::x25519:
      return false;
  }
  return false;
}

std::optional<Bytes> recover_public_key(ByteView digest, const Signature& signature) {
  if (signature.curve != Curve::secp256k1) return std::nullopt;
  return detail::secp_recover(digest, signature.bytes);
}

std::optional<std::string> recover_evm_address(ByteView digest,
                                               const Signature& signature) {
  auto pk = recover_public_key(digest, signature);
  if (!pk) return std::nullopt;
  return evm_address_from_public_key(*pk);
}

Signature sign_typed_data_with_context(const IdentityRoot& root, std::string_view ctx,
                                       ByteView typed_data_hash) {
  if (typed_data_hash.size() != 32) {
    throw Error(Errc::hash_length, "typed data hash must be 32 bytes");
  }
  auto keypair = derive_contextual_keypair(root, Curve::secp256k1, ctx);
  return sign_digest(keypair, typed_data_hash);
}

}  // namespace aesp::crypto
