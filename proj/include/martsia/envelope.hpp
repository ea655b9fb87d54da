#pragma once

#include <optional>
#include <string>
#include <vector>

#include "martsia/maabe.hpp"

namespace martsia::envelope {

struct SliceSpec {
  uint32_t index = 0;  // contiguous from 1
  Bytes plaintext;
  std::string policy_text;
};

struct SealedSlice {
  Bytes slice_id;           // 32 bytes, hash(message salt || index)
  std::string policy_text;  // full (instance-injected) policy, stored in clear
  maabe::AbeCiphertext capsule;
  Bytes aead_nonce;  // 12 bytes
  Bytes aead_ciphertext;
};

struct MessageEnvelope {
  std::string version;
  Bytes message_id;  // 32 bytes
  std::string sender;
  Bytes salt;
  std::vector<SealedSlice> slices;
};

inline constexpr const char* kEnvelopeVersion = "menv/1";

// Per slice: inject the instance clause, expand over the universe, compile
// the LSSS, ABE-encapsulate a fresh DEK and AEAD-encrypt the payload with
// slice_id + policy text as associated data.
MessageEnvelope seal_message(const std::vector<SliceSpec>& slices, const std::string& instance_id,
                             const std::vector<std::string>& universe,
                             const maabe::PublicIndex& publics, const maabe::GlobalParams& gp,
                             const std::string& sender, Rng& rng);

// nullopt = Unqualified. Throws UnknownSliceId / IntegrityError. A wrong DEK
// (collusion, tampering) surfaces as IntegrityError from the AEAD tag check.
std::optional<Bytes> open_slice(const maabe::GlobalParams& gp, const MessageEnvelope& env,
                                const Bytes& slice_id, const Bytes& gid,
                                const std::vector<maabe::UserKeyComponent>& components);

// Canonical JSON: sorted keys, no insignificant whitespace, binary as
// base64url without padding. Structurally equal envelopes serialize to
// identical bytes.
Bytes serialize(const maabe::GlobalParams& gp, const MessageEnvelope& env);
MessageEnvelope deserialize(const maabe::GlobalParams& gp, const Bytes& bytes);

}  // namespace martsia::envelope
