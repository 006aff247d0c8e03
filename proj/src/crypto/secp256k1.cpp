// secp256k1 ECDSA with deterministic (RFC 6979, HMAC-SHA256) nonces, low-s
// normalization and public-key recovery. Field and group arithmetic come
// from OpenSSL's EC_POINT/BIGNUM; the signing protocol itself lives here
// because OpenSSL 3.0 has neither deterministic nonces nor recovery.
#include <memory>

#include <openssl/bn.h>
#include <openssl/ec.h>
#include <openssl/obj_mac.h>

#include "aesp/crypto/hash.hpp"
#include "aesp/error.hpp"
#include "detail.hpp"

namespace aesp::crypto::detail {

namespace {

struct BnFree {
  void operator()(BIGNUM* b) const { BN_clear_free(b); }
};
struct CtxFree {
  void operator()(BN_CTX* c) const { BN_CTX_free(c); }
};
struct PointFree {
  void operator()(EC_POINT* p) const { EC_POINT_clear_free(p); }
};
using Bn = std::unique_ptr<BIGNUM, BnFree>;
using Ctx = std::unique_ptr<BN_CTX, CtxFree>;
using Point = std::unique_ptr<EC_POINT, PointFree>;

const EC_GROUP* group() {
  static const EC_GROUP* g = [] {
    EC_GROUP* created = EC_GROUP_new_by_curve_name(NID_secp256k1);
    if (created == nullptr) throw Error(Errc::invalid_argument, "secp256k1 unavailable");
    return created;
  }();
  return g;
}

const BIGNUM* order() { return EC_GROUP_get0_order(group()); }

const BIGNUM* field_prime() {
  static const BIGNUM* p = [] {
    BIGNUM* prime = BN_new();
    EC_GROUP_get_curve(group(), prime, nullptr, nullptr, nullptr);
    return prime;
  }();
  return p;
}

Bn new_bn() {
  Bn b(BN_new());
  if (!b) throw Error(Errc::invalid_argument, "BN_new failed");
  return b;
}

Ctx new_ctx() {
  Ctx c(BN_CTX_new());
  if (!c) throw Error(Errc::invalid_argument, "BN_CTX_new failed");
  return c;
}

Point new_point() {
  Point p(EC_POINT_new(group()));
  if (!p) throw Error(Errc::invalid_argument, "EC_POINT_new failed");
  return p;
}

Bn from_be(ByteView bytes) {
  Bn b(BN_bin2bn(bytes.data(), static_cast<int>(bytes.size()), nullptr));
  if (!b) throw Error(Errc::invalid_argument, "BN_bin2bn failed");
  return b;
}

void to_be32(const BIGNUM* b, std::uint8_t* out) {
  if (BN_bn2binpad(b, out, 32) != 32) {
    throw Error(Errc::invalid_argument, "scalar does not fit 32 bytes");
  }
}

Bytes encode_point(const EC_POINT* p, bool compressed, BN_CTX* ctx) {
  auto form = compressed ? POINT_CONVERSION_COMPRESSED : POINT_CONVERSION_UNCOMPRESSED;
  Bytes out(compressed ? 33 : 65);
  if (EC_POINT_point2oct(group(), p, form, out.data(), out.size(), ctx) != out.size()) {
    throw Error(Errc::invalid_argument, "point encoding failed");
  }
  return out;
}

bool in_scalar_range(const BIGNUM* v) {
  return !BN_is_zero(v) && !BN_is_negative(v) && BN_cmp(v, order()) < 0;
}

Bytes concat(std::initializer_list<ByteView> parts) {
  Bytes out;
  for (auto p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

SecretBytes secp_reduce_scalar(ByteView candidate) {
  auto ctx = new_ctx();
  Bn v = from_be(candidate);
  Bn r = new_bn();
  BN_nnmod(r.get(), v.get(), order(), ctx.get());
  if (BN_is_zero(r.get())) {
    throw Error(Errc::invalid_argument, "derived secp256k1 scalar is zero");
  }
  SecretBytes out(32);
  to_be32(r.get(), out.data());
  return out;
}

Bytes secp_public_key(ByteView scalar, bool compressed) {
  auto ctx = new_ctx();
  Bn d = from_be(scalar);
  if (!in_scalar_range(d.get())) {
    throw Error(Errc::invalid_argument, "secp256k1 scalar out of range");
  }
  auto q = new_point();
  EC_POINT_mul(group(), q.get(), d.get(), nullptr, nullptr, ctx.get());
  return encode_point(q.get(), compressed, ctx.get());
}

std::optional<Bytes> secp_decompress(ByteView public_key) {
  if (public_key.size() != 33 && public_key.size() != 65) return std::nullopt;
  auto ctx = new_ctx();
  auto q = new_point();
  if (EC_POINT_oct2point(group(), q.get(), public_key.data(), public_key.size(),
                         ctx.get()) != 1) {
    return std::nullopt;
  }
  if (EC_POINT_is_on_curve(group(), q.get(), ctx.get()) != 1 ||
      EC_POINT_is_at_infinity(group(), q.get())) {
    return std::nullopt;
  }
  return encode_point(q.get(), false, ctx.get());
}

std::array<std::uint8_t, 65> secp_sign(ByteView scalar, ByteView digest) {
  if (scalar.size() != 32 || digest.size() != 32) {
    throw Error(Errc::invalid_argument, "secp_sign expects 32-byte scalar and digest");
  }
  auto ctx = new_ctx();
  Bn d = from_be(scalar);
  if (!in_scalar_range(d.get())) {
    throw Error(Errc::invalid_argument, "secp256k1 scalar out of range");
  }
  Bn z = from_be(digest);
  Bn z_mod = new_bn();
  BN_nnmod(z_mod.get(), z.get(), order(), ctx.get());
  std::uint8_t h1[32];
  to_be32(z_mod.get(), h1);

  // RFC 6979 section 3.2 with HMAC-SHA256 and qlen = 256.
  Hash32 v;
  Hash32 k;
  v.fill(0x01);
  k.fill(0x00);
  const std::uint8_t zero = 0x00;
  const std::uint8_t one = 0x01;
  k = hmac_sha256(k, concat({v, ByteView(&zero, 1), scalar, ByteView(h1, 32)}));
  v = hmac_sha256(k, v);
  k = hmac_sha256(k, concat({v, ByteView(&one, 1), scalar, ByteView(h1, 32)}));
  v = hmac_sha256(k, v);

  auto big_r = new_point();
  Bn rx = new_bn();
  Bn ry = new_bn();
  Bn r = new_bn();
  Bn s = new_bn();
  Bn k_inv = new_bn();
  Bn tmp = new_bn();
  int recid = 0;
  for (;;) {
    v = hmac_sha256(k, v);
    Bn nonce = from_be(v);
    if (in_scalar_range(nonce.get())) {
      EC_POINT_mul(group(), big_r.get(), nonce.get(), nullptr, nullptr, ctx.get());
      EC_POINT_get_affine_coordinates(group(), big_r.get(), rx.get(), ry.get(), ctx.get());
      BN_nnmod(r.get(), rx.get(), order(), ctx.get());
      if (!BN_is_zero(r.get())) {
        // s = k^-1 (z + r d) mod n
        BN_mod_mul(tmp.get(), r.get(), d.get(), order(), ctx.get());
        BN_mod_add(tmp.get(), tmp.get(), z_mod.get(), order(), ctx.get());
        BN_mod_inverse(k_inv.get(), nonce.get(), order(), ctx.get());
        BN_mod_mul(s.get(), k_inv.get(), tmp.get(), order(), ctx.get());
        if (!BN_is_zero(s.get())) {
          recid = (BN_is_odd(ry.get()) ? 1 : 0) | (BN_cmp(rx.get(), order()) >= 0 ? 2 : 0);
          break;
        }
      }
    }
    k = hmac_sha256(k, concat({v, ByteView(&zero, 1)}));
    v = hmac_sha256(k, v);
  }

  Bn half = new_bn();
  BN_rshift1(half.get(), order());
  if (BN_cmp(s.get(), half.get()) > 0) {
    BN_sub(s.get(), order(), s.get());
    recid ^= 1;
  }

  std::array<std::uint8_t, 65> out{};
  to_be32(r.get(), out.data());
  to_be32(s.get(), out.data() + 32);
  out[64] = static_cast<std::uint8_t>(27 + recid);
  return out;
}

std::optional<Bytes> secp_recover(ByteView digest, ByteView signature) {
  if (digest.size() != 32 || signature.size() != 65) return std::nullopt;
  int v = signature[64];
  int recid = v >= 27 ? v - 27 : v;
  if (recid < 0 || recid > 3) return std::nullopt;

  auto ctx = new_ctx();
  Bn r = from_be(signature.subspan(0, 32));
  Bn s = from_be(signature.subspan(32, 32));
  if (!in_scalar_range(r.get()) || !in_scalar_range(s.get())) return std::nullopt;

  Bn x = new_bn();
  BN_copy(x.get(), r.get());
  if (recid & 2) BN_add(x.get(), x.get(), order());
  if (BN_cmp(x.get(), field_prime()) >= 0) return std::nullopt;

  auto big_r = new_point();
  if (EC_POINT_set_compressed_coordinates(group(), big_r.get(), x.get(), recid & 1,
                                          ctx.get()) != 1) {
    return std::nullopt;
  }

  // Q = r^-1 (s R - z G)
  Bn z = from_be(digest);
  Bn r_inv = new_bn();
  BN_mod_inverse(r_inv.get(), r.get(), order(), ctx.get());
  Bn u1 = new_bn();
  Bn u2 = new_bn();
  BN_mod_mul(u1.get(), z.get(), r_inv.get(), order(), ctx.get());
  BN_sub(u1.get(), order(), u1.get());
  BN_nnmod(u1.get(), u1.get(), order(), ctx.get());
  BN_mod_mul(u2.get(), s.get(), r_inv.get(), order(), ctx.get());

  auto q = new_point();
  if (EC_POINT_mul(group(), q.get(), u1.get(), big_r.get(), u2.get(), ctx.get()) != 1 ||
      EC_POINT_is_at_infinity(group(), q.get())) {
    return std::nullopt;
  }
  return encode_point(q.get(), true, ctx.get());
}

}  // namespace aesp::crypto::detail
