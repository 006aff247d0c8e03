#include "aesp/crypto/hash.hpp"

#include <cstring>

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/hmac.h>
#include <openssl/kdf.h>
#include <openssl/sha.h>

#include "aesp/error.hpp"

namespace aesp::crypto {

namespace {

constexpr std::uint64_t kRoundConstants[24] = {
    0x0000000000000001ULL, 0x0000000000008082ULL, 0x800000000000808aULL,
    0x8000000080008000ULL, 0x000000000000808bULL, 0x0000000080000001ULL,
    0x8000000080008081ULL, 0x8000000000008009ULL, 0x000000000000008aULL,
    0x0000000000000088ULL, 0x0000000080008009ULL, 0x000000008000000aULL,
    0x000000008000808bULL, 0x800000000000008bULL, 0x8000000000008089ULL,
    0x8000000000008003ULL, 0x8000000000008002ULL, 0x8000000000000080ULL,
    0x000000000000800aULL, 0x800000008000000aULL, 0x8000000080008081ULL,
    0x8000000000008080ULL, 0x0000000080000001ULL, 0x8000000080008008ULL};

constexpr int kRotation[25] = {0,  1,  62, 28, 27, 36, 44, 6,  55, 20, 3,  10, 43,
                               25, 39, 41, 45, 15, 21, 8,  18, 2,  61, 56, 14};

inline std::uint64_t rotl(std::uint64_t x, int n) {
  return n == 0 ? x : (x << n) | (x >> (64 - n));
}

void keccak_f1600(std::uint64_t a[25]) {
  for (auto rc : kRoundConstants) {
    std::uint64_t c[5];
    for (int x = 0; x < 5; ++x) c[x] = a[x] ^ a[x + 5] ^ a[x + 10] ^ a[x + 15] ^ a[x + 20];
    for (int x = 0; x < 5; ++x) {
      std::uint64_t d = c[(x + 4) % 5] ^ rotl(c[(x + 1) % 5], 1);
      for (int y = 0; y < 25; y += 5) a[y + x] ^= d;
    }
    // rho + pi: B[y, 2x+3y] = rot(A[x, y])
    std::uint64_t b[25];
    for (int x = 0; x < 5; ++x) {
      for (int y = 0; y < 5; ++y) {
        b[y + 5 * ((2 * x + 3 * y) % 5)] = rotl(a[x + 5 * y], kRotation[x + 5 * y]);
      }
    }
    for (int y = 0; y < 25; y += 5) {
      for (int x = 0; x < 5; ++x) {
        a[y + x] = b[y + x] ^ (~b[y + (x + 1) % 5] & b[y + (x + 2) % 5]);
      }
    }
    a[0] ^= rc;
  }
}

void absorb_block(std::uint64_t state[25], const std::uint8_t* block, std::size_t rate) {
  for (std::size_t i = 0; i < rate / 8; ++i) {
    std::uint64_t lane = 0;
    for (int k = 7; k >= 0; --k) lane = (lane << 8) | block[8 * i + k];
    state[i] ^= lane;
  }
  keccak_f1600(state);
}

}  // namespace

Hash32 sha256(ByteView data) {
  Hash32 out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

Hash32 keccak256(ByteView data) {
  constexpr std::size_t rate = 136;
  std::uint64_t state[25] = {};
  std::size_t offset = 0;
  while (data.size() - offset >= rate) {
    absorb_block(state, data.data() + offset, rate);
    offset += rate;
  }
  std::uint8_t last[rate] = {};
  std::memcpy(last, data.data() + offset, data.size() - offset);
  last[data.size() - offset] ^= 0x01;  // Keccak padding, not the SHA-3 0x06
  last[rate - 1] ^= 0x80;
  absorb_block(state, last, rate);

  Hash32 out{};
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(state[i / 8] >> (8 * (i % 8)));
  }
  return out;
}

Hash32 hmac_sha256(ByteView key, ByteView data) {
  Hash32 out{};
  unsigned int len = 0;
  static const std::uint8_t empty = 0;
  const void* key_ptr = key.empty() ? &empty : key.data();
  if (HMAC(EVP_sha256(), key_ptr, static_cast<int>(key.size()), data.data(), data.size(),
           out.data(), &len) == nullptr) {
    throw Error(Errc::invalid_argument, "HMAC-SHA256 failed");
  }
  return out;
}

Hash32 hkdf_extract(ByteView salt, ByteView ikm) {
  Hash32 zeros{};
  ByteView effective = salt.empty() ? ByteView(zeros) : salt;
  return hmac_sha256(effective, ikm);
}

Bytes hkdf_expand(ByteView prk, ByteView info, std::size_t length) {
  if (length == 0 || length > 255 * 32) {
    throw Error(Errc::invalid_argument, "HKDF-Expand length out of range");
  }
  EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "HKDF", nullptr);
  if (kdf == nullptr) throw Error(Errc::invalid_argument, "HKDF unavailable");
  EVP_KDF_CTX* ctx = EVP_KDF_CTX_new(kdf);
  EVP_KDF_free(kdf);
  if (ctx == nullptr) throw Error(Errc::invalid_argument, "HKDF context allocation failed");

  int mode = EVP_KDF_HKDF_MODE_EXPAND_ONLY;
  char digest[] = "SHA256";
  static std::uint8_t dummy = 0;
  OSSL_PARAM params[] = {
      OSSL_PARAM_construct_int(OSSL_KDF_PARAM_MODE, &mode),
      OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0),
      OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY,
                                        const_cast<std::uint8_t*>(prk.data()), prk.size()),
      OSSL_PARAM_construct_octet_string(
          OSSL_KDF_PARAM_INFO,
          info.empty() ? &dummy : const_cast<std::uint8_t*>(info.data()), info.size()),
      OSSL_PARAM_construct_end()};

  Bytes out(length);
  int rc = EVP_KDF_derive(ctx, out.data(), out.size(), params);
  EVP_KDF_CTX_free(ctx);
  if (rc != 1) throw Error(Errc::invalid_argument, "HKDF-Expand failed");
  return out;
}

}  // namespace aesp::crypto
