#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace martsia {

using Bytes = std::vector<uint8_t>;

Bytes to_bytes(std::string_view s);
std::string to_string(const Bytes& b);

std::string hex_encode(const Bytes& b);
Bytes hex_decode(std::string_view hex);

// base64url, no padding (RFC 4648 §5)
std::string b64url_encode(const Bytes& b);
Bytes b64url_decode(std::string_view s);

Bytes sha256(const Bytes& data);
Bytes sha256_cat(std::initializer_list<Bytes> parts);
Bytes hmac_sha256(const Bytes& key, const Bytes& data);

// HKDF-SHA256 extract+expand.
Bytes hkdf_sha256(const Bytes& ikm, const Bytes& salt, const Bytes& info, size_t out_len);

Bytes be64(uint64_t v);

// Deterministic stream RNG (ChaCha20 keyed by a 32-byte seed, block counter
// as nonce). Same seed, same call sequence, same output.
class Rng {
 public:
  explicit Rng(const Bytes& seed);
  explicit Rng(std::string_view seed_label);

  Bytes bytes(size_t n);
  // Derives an independent child stream; consuming the child does not
  // advance this generator.
  Rng fork(std::string_view label);

 private:
  std::array<uint8_t, 32> key_;
  uint64_t counter_ = 0;
};

}  // namespace martsia
