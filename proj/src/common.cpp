#include "martsia/common.hpp"

#include <sodium.h>

#include <cstring>
#include <mutex>

namespace martsia {

namespace {
void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
  });
}
}  // namespace

Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

std::string to_string(const Bytes& b) { return std::string(b.begin(), b.end()); }

std::string hex_encode(const Bytes& b) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(b.size() * 2);
  for (uint8_t c : b) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

Bytes hex_decode(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("hex: odd length");
  auto nib = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("hex: bad digit");
  };
  Bytes out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<uint8_t>(nib(hex[2 * i]) << 4 | nib(hex[2 * i + 1]));
  return out;
}

std::string b64url_encode(const Bytes& b) {
  ensure_sodium();
  std::string out(sodium_base64_encoded_len(b.size(), sodium_base64_VARIANT_URLSAFE_NO_PADDING), '\0');
  sodium_bin2base64(out.data(), out.size(), b.data(), b.size(),
                    sodium_base64_VARIANT_URLSAFE_NO_PADDING);
  out.resize(std::strlen(out.c_str()));
  return out;
}

Bytes b64url_decode(std::string_view s) {
  ensure_sodium();
  Bytes out(s.size() * 3 / 4 + 4);
  size_t out_len = 0;
  if (sodium_base642bin(out.data(), out.size(), s.data(), s.size(), nullptr, &out_len,
                        nullptr, sodium_base64_VARIANT_URLSAFE_NO_PADDING) != 0)
    throw std::invalid_argument("b64url: malformed input");
  out.resize(out_len);
  return out;
}

Bytes sha256(const Bytes& data) {
  ensure_sodium();
  Bytes out(crypto_hash_sha256_BYTES);
  crypto_hash_sha256(out.data(), data.data(), data.size());
  return out;
}

Bytes sha256_cat(std::initializer_list<Bytes> parts) {
  ensure_sodium();
  crypto_hash_sha256_state st;
  crypto_hash_sha256_init(&st);
  for (const Bytes& p : parts) crypto_hash_sha256_update(&st, p.data(), p.size());
  Bytes out(crypto_hash_sha256_BYTES);
  crypto_hash_sha256_final(&st, out.data());
  return out;
}

Bytes hmac_sha256(const Bytes& key, const Bytes& data) {
  ensure_sodium();
  crypto_auth_hmacsha256_state st;
  crypto_auth_hmacsha256_init(&st, key.data(), key.size());
  crypto_auth_hmacsha256_update(&st, data.data(), data.size());
  Bytes out(crypto_auth_hmacsha256_BYTES);
  crypto_auth_hmacsha256_final(&st, out.data());
  return out;
}

Bytes hkdf_sha256(const Bytes& ikm, const Bytes& salt, const Bytes& info, size_t out_len) {
  Bytes prk = hmac_sha256(salt.empty() ? Bytes(32, 0) : salt, ikm);
  Bytes out;
  Bytes t;
  uint8_t block = 1;
  while (out.size() < out_len) {
    Bytes msg = t;
    msg.insert(msg.end(), info.begin(), info.end());
    msg.push_back(block++);
    t = hmac_sha256(prk, msg);
    out.insert(out.end(), t.begin(), t.end());
  }
  out.resize(out_len);
  return out;
}

Bytes be64(uint64_t v) {
  Bytes out(8);
  for (int i = 7; i >= 0; --i) {
    out[i] = static_cast<uint8_t>(v & 0xff);
    v >>= 8;
  }
  return out;
}

Rng::Rng(const Bytes& seed) {
  ensure_sodium();
  Bytes k = sha256(seed);
  std::memcpy(key_.data(), k.data(), 32);
}

Rng::Rng(std::string_view seed_label) : Rng(to_bytes(seed_label)) {}

Bytes Rng::bytes(size_t n) {
  Bytes out(n);
  uint8_t nonce[crypto_stream_chacha20_NONCEBYTES] = {0};
  uint64_t c = counter_++;
  std::memcpy(nonce, &c, sizeof(c));
  crypto_stream_chacha20(out.data(), out.size(), nonce, key_.data());
  return out;
}

Rng Rng::fork(std::string_view label) {
  Bytes seed(key_.begin(), key_.end());
  Bytes lab = to_bytes(label);
  seed.insert(seed.end(), lab.begin(), lab.end());
  return Rng(seed);
}

}  // namespace martsia
