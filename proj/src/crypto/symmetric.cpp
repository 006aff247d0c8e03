#include "aesp/crypto/symmetric.hpp"

#include <memory>

#include <openssl/evp.h>
#include <sodium.h>

#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"
#include "detail.hpp"

namespace aesp::crypto {

using detail::KeyAccess;

namespace {

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;

CipherCtx new_cipher_ctx() {
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw Error(Errc::invalid_argument, "EVP_CIPHER_CTX_new failed");
  return ctx;
}

const SecretBytes& raw_key(const SymmetricKey& key) {
  const auto& m = KeyAccess::material(key);
  if (m.secret.size() != 32) throw Error(Errc::invalid_key_handle, "AEAD key must be 32 bytes");
  return m.secret;
}

}  // namespace

Hash32 SymmetricKey::fingerprint() const {
  return sha256(KeyAccess::material(*this).secret.span());
}

SymmetricKey derive_symmetric_key(const IdentityRoot& root, std::string_view ctx) {
  return KeyAccess::make_symmetric(detail::derive_context_key(root, "aead", ctx));
}

SymmetricKey agree(const DerivedKeypair& own, ByteView peer_public_key,
                   std::string_view label) {
  const auto& key = KeyAccess::material(own.handle);
  if (key.curve != Curve::x25519) {
    throw Error(Errc::curve_mismatch, "key agreement needs an x25519 key");
  }
  if (peer_public_key.size() != crypto_scalarmult_BYTES) {
    throw Error(Errc::invalid_argument, "x25519 public key must be 32 bytes");
  }
  detail::ensure_sodium();
  SecretBytes shared(crypto_scalarmult_BYTES);
  if (crypto_scalarmult(shared.data(), key.secret.data(), peer_public_key.data()) != 0) {
    throw Error(Errc::invalid_argument, "x25519 agreement produced a low-order result");
  }
  Bytes okm = hkdf_expand(shared.span(), as_bytes(label), 32);
  SecretBytes out(okm);
  secure_wipe(okm);
  return KeyAccess::make_symmetric(std::move(out));
}

Bytes aes_gcm_encrypt(const SymmetricKey& key, ByteView nonce, ByteView plaintext,
                      ByteView aad) {
  if (nonce.size() != kGcmNonceSize) throw Error(Errc::invalid_argument, "GCM nonce must be 12 bytes");
  const auto& k = raw_key(key);
  auto ctx = new_cipher_ctx();
  int len = 0;
  Bytes out(plaintext.size() + kGcmTagSize);
  bool ok = EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, k.data(), nonce.data()) == 1;
  if (ok && !aad.empty()) {
    ok = EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
  }
  int written = 0;
  if (ok && !plaintext.empty()) {
    ok = EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                           static_cast<int>(plaintext.size())) == 1;
    written = len;
  }
  ok = ok && EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len) == 1;
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kGcmTagSize,
                                 out.data() + plaintext.size()) == 1;
  if (!ok) throw Error(Errc::invalid_argument, "AES-256-GCM encryption failed");
  return out;
}

Bytes aes_gcm_decrypt(const SymmetricKey& key, ByteView nonce, ByteView sealed,
                      ByteView aad) {
  if (nonce.size() != kGcmNonceSize || sealed.size() < kGcmTagSize) {
    throw Error(Errc::authentication_failed, "malformed AEAD input");
  }
  const auto& k = raw_key(key);
  auto ctx = new_cipher_ctx();
  const std::size_t ct_len = sealed.size() - kGcmTagSize;
  Bytes out(ct_len);
  int len = 0;
  bool ok = EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, k.data(), nonce.data()) == 1;
  if (ok && !aad.empty()) {
    ok = EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())) == 1;
  }
  int written = 0;
  if (ok && ct_len > 0) {
    ok = EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(ct_len)) == 1;
    written = len;
  }
  Bytes tag(sealed.begin() + static_cast<std::ptrdiff_t>(ct_len), sealed.end());
  ok = ok && EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kGcmTagSize, tag.data()) == 1;
  ok = ok && EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) == 1;
  if (!ok) {
    secure_wipe(out);
    throw Error(Errc::authentication_failed, "AEAD authentication failed");
  }
  return out;
}

Bytes aead_seal(const SymmetricKey& key, ByteView plaintext, ByteView aad,
                RandomSource& rng) {
  Bytes nonce(kGcmNonceSize);
  rng.fill(nonce);
  Bytes ct = aes_gcm_encrypt(key, nonce, plaintext, aad);
  nonce.insert(nonce.end(), ct.begin(), ct.end());
  return nonce;
}

Bytes aead_open(const SymmetricKey& key, ByteView sealed, ByteView aad) {
  if (sealed.size() < kGcmNonceSize + kGcmTagSize) {
    throw Error(Errc::authentication_failed, "sealed buffer too short");
  }
  return aes_gcm_decrypt(key, sealed.first(kGcmNonceSize), sealed.subspan(kGcmNonceSize), aad);
}

}  // namespace aesp::crypto
