#pragma once

#include <cstddef>

#include "aesp/crypto/bytes.hpp"

namespace aesp::crypto {

Hash32 sha256(ByteView data);
inline Hash32 sha256(std::string_view data) { return sha256(as_bytes(data)); }

/// Original Keccak-256 (Ethereum), not FIPS 202 SHA3-256.
Hash32 keccak256(ByteView data);
inline Hash32 keccak256(std::string_view data) { return keccak256(as_bytes(data)); }

Hash32 hmac_sha256(ByteView key, ByteView data);

/// RFC 5869 with SHA-256. An empty salt means HashLen zero bytes.
Hash32 hkdf_extract(ByteView salt, ByteView ikm);
Bytes hkdf_expand(ByteView prk, ByteView info, std::size_t length);

}  // namespace aesp::crypto
