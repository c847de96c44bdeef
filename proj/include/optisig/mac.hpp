#pragma once

#include "optisig/bits.hpp"

namespace optisig {

// HMAC-SHA256, 32-byte digest. Any key length.
Bytes hmac_sha256(const Bytes& key, const Bytes& message);

// First `tag_bytes` of the digest.
Bytes hmac_sha256_truncated(const Bytes& key, const Bytes& message, std::size_t tag_bytes);

}  // namespace optisig
