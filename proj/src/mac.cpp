#include "optisig/mac.hpp"

#include <openssl/hmac.h>

#include <stdexcept>

namespace optisig {

Bytes hmac_sha256(const Bytes& key, const Bytes& message) {
  Bytes digest(32);
  unsigned int len = 0;
  const unsigned char* ok =
      HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(),
           message.size(), digest.data(), &len);
  if (!ok || len != 32) throw std::runtime_error("hmac_sha256: OpenSSL HMAC failed");
  return digest;
}

Bytes hmac_sha256_truncated(const Bytes& key, const Bytes& message, std::size_t tag_bytes) {
  Bytes digest = hmac_sha256(key, message);
  if (tag_bytes > digest.size())
    throw std::invalid_argument("hmac_sha256_truncated: tag longer than digest");
  digest.resize(tag_bytes);
  return digest;
}

}  // namespace optisig
