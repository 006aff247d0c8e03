#include "aesp/crypto/keys.hpp"

#include <cctype>

#include <sodium.h>

#include "aesp/constants.hpp"
#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"
#include "detail.hpp"

namespace aesp::crypto {

namespace detail {

const KeyMaterial& KeyAccess::material(const KeyHandle& handle) {
  if (!handle.material_) throw Error(Errc::invalid_key_handle, "empty key handle");
  return *handle.material_;
}

const KeyMaterial& KeyAccess::material(const SymmetricKey& key) {
  if (!key.material_) throw Error(Errc::invalid_key_handle, "empty symmetric key");
  return *key.material_;
}

const RootMaterial& KeyAccess::root(const IdentityRoot& root) {
  if (!root.material_) throw Error(Errc::invalid_key_handle, "empty identity root");
  return *root.material_;
}

IdentityRoot KeyAccess::make_root(SecretBytes key) {
  return IdentityRoot(std::make_shared<const RootMaterial>(RootMaterial{std::move(key)}));
}

KeyHandle KeyAccess::make_handle(Curve curve, SecretBytes secret) {
  return KeyHandle(
      std::make_shared<const KeyMaterial>(KeyMaterial{curve, std::move(secret)}));
}

SymmetricKey KeyAccess::make_symmetric(SecretBytes key) {
  // The curve tag is unused for symmetric material.
  return SymmetricKey(
      std::make_shared<const KeyMaterial>(KeyMaterial{Curve::x25519, std::move(key)}));
}

void ensure_sodium() {
  static const bool ok = sodium_init() >= 0;
  if (!ok) throw Error(Errc::invalid_argument, "libsodium initialisation failed");
}

SecretBytes argon2id(std::string_view password, ByteView salt, std::size_t out_len) {
  ensure_sodium();
  if (salt.size() != crypto_pwhash_SALTBYTES) {
    throw Error(Errc::invalid_argument, "Argon2id salt must be 16 bytes");
  }
  SecretBytes out(out_len);
  // libsodium's Argon2id always runs with one lane, matching p = 1.
  if (crypto_pwhash(out.data(), out.size(), password.data(), password.size(), salt.data(),
                    constants::kArgon2Iterations, constants::kArgon2MemoryBytes,
                    crypto_pwhash_ALG_ARGON2ID13) != 0) {
    throw Error(Errc::invalid_argument, "Argon2id failed (out of memory?)");
  }
  return out;
}

SecretBytes derive_context_key(const IdentityRoot& root, std::string_view label,
                               std::string_view ctx) {
  const auto& material = KeyAccess::root(root);
  Hash32 prk = hkdf_extract({}, material.key.span());
  std::string info;
  info.reserve(constants::kHkdfInfoPrefix.size() + label.size() + 1 + ctx.size());
  info.append(constants::kHkdfInfoPrefix).append(label).append(":").append(ctx);
  Bytes okm = hkdf_expand(prk, as_bytes(info), 32);
  SecretBytes out(okm);
  secure_wipe(okm);
  secure_wipe(prk);
  return out;
}

}  // namespace detail

using detail::KeyAccess;

std::string_view to_string(Curve curve) noexcept {
  switch (curve) {
    case Curve::ed25519: return "ed25519";
    case Curve::secp256k1: return "secp256k1";
    case Curve::x25519: return "x25519";
  }
  return "unknown";
}

Curve curve_from_string(std::string_view name) {
  if (name == "ed25519") return Curve::ed25519;
  if (name == "secp256k1") return Curve::secp256k1;
  if (name == "x25519") return Curve::x25519;
  throw Error(Errc::invalid_argument, "unknown curve: " + std::string(name));
}

Hash32 IdentityRoot::fingerprint() const {
  return sha256(KeyAccess::root(*this).key.span());
}

IdentityRoot derive_identity_root(const MasterCredential& credential) {
  if (credential.rev_payload.size() != 32) {
    throw Error(Errc::payload_length, "REV payload must be exactly 32 bytes");
  }
  ByteView salt(credential.rev_payload.data(), 16);
  SecretBytes stretched = detail::argon2id(credential.passphrase_domain, salt, 32);
  Hash32 prk = hkdf_extract({}, stretched.span());
  Bytes root = hkdf_expand(prk, as_bytes(constants::kIdentityRootLabel), 32);
  SecretBytes secret(root);
  secure_wipe(root);
  secure_wipe(prk);
  return KeyAccess::make_root(std::move(secret));
}

DerivedKeypair import_keypair(Curve curve, ByteView secret) {
  if (secret.size() != 32) {
    throw Error(Errc::invalid_argument, "secret key material must be 32 bytes");
  }
  detail::ensure_sodium();
  DerivedKeypair out;
  out.curve = curve;
  switch (curve) {
    case Curve::ed25519: {
      SecretBytes sk(crypto_sign_SECRETKEYBYTES);
      out.public_key.resize(crypto_sign_PUBLICKEYBYTES);
      crypto_sign_seed_keypair(out.public_key.data(), sk.data(), secret.data());
      out.handle = KeyAccess::make_handle(curve, std::move(sk));
      break;
    }
    case Curve::x25519: {
      out.public_key.resize(crypto_scalarmult_BYTES);
      if (crypto_scalarmult_base(out.public_key.data(), secret.data()) != 0) {
        throw Error(Errc::invalid_argument, "x25519 base multiplication failed");
      }
      out.handle = KeyAccess::make_handle(curve, SecretBytes(secret));
      break;
    }
    case Curve::secp256k1: {
      out.public_key = detail::secp_public_key(secret, true);
      out.handle = KeyAccess::make_handle(curve, SecretBytes(secret));
      break;
    }
  }
  return out;
}

DerivedKeypair derive_contextual_keypair(const IdentityRoot& root, Curve curve,
                                         std::string_view ctx) {
  SecretBytes dk = detail::derive_context_key(root, to_string(curve), ctx);
  if (curve == Curve::secp256k1) {
    SecretBytes scalar = detail::secp_reduce_scalar(dk.span());
    return import_keypair(curve, scalar.span());
  }
  return import_keypair(curve, dk.span());
}

std::string to_checksum_address(ByteView address20) {
  if (address20.size() != 20) {
    throw Error(Errc::invalid_address, "EVM address must be 20 bytes");
  }
  std::string lower = to_hex(address20);
  Hash32 h = keccak256(std::string_view(lower));
  std::string out = "0x";
  for (std::size_t i = 0; i < lower.size(); ++i) {
    char c = lower[i];
    int nibble = (i % 2 == 0) ? (h[i / 2] >> 4) : (h[i / 2] & 0x0f);
    if (c >= 'a' && c <= 'f' && nibble >= 8) c = static_cast<char>(c - 'a' + 'A');
    out.push_back(c);
  }
  return out;
}

std::string evm_address_from_public_key(ByteView public_key) {
  auto full = detail::secp_decompress(public_key);
  if (!full) throw Error(Errc::invalid_argument, "not a secp256k1 public key");
  Hash32 h = keccak256(ByteView(full->data() + 1, 64));
  return to_checksum_address(ByteView(h.data() + 12, 20));
}

bool is_evm_address(std::string_view text) {
  if (text.size() != 42 || text[0] != '0' || (text[1] != 'x' && text[1] != 'X')) {
    return false;
  }
  for (char c : text.substr(2)) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string address_for(const DerivedKeypair& keypair, AddressNamespace ns) {
  switch (ns) {
    case AddressNamespace::evm:
      if (keypair.curve != Curve::secp256k1) {
        throw Error(Errc::curve_mismatch, "EVM addresses need a secp256k1 key");
      }
      return evm_address_from_public_key(keypair.public_key);
    case AddressNamespace::ed25519_chain:
      if (keypair.curve != Curve::ed25519) {
        throw Error(Errc::curve_mismatch, "ed25519 chain addresses need an ed25519 key");
      }
      return to_base58(keypair.public_key);
  }
  throw Error(Errc::invalid_argument, "unknown address namespace");
}

}  // namespace aesp::crypto
