#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "martsia/common.hpp"
#include "martsia/lsss.hpp"
#include "martsia/pairing.hpp"

namespace martsia::maabe {

using pairing::Fq2;
using pairing::Int;
using pairing::Point;

// Pairing group plus the scheme-wide generator. The generator is derived by
// hashing the setup seed to the curve, so identical seeds give identical
// parameters and the generator's discrete log is unknown to everyone.
struct GlobalParams {
  std::string curve_id;
  Bytes seed;
  Point g;

  const pairing::Group& group() const;
  Bytes serialize() const;
  static GlobalParams deserialize(const Bytes& b);
};

GlobalParams global_setup(const Bytes& seed, const std::string& curve_id = "a1536");

// H: byte-string -> G, domain-separated hash-to-curve.
Point hash_gid(const GlobalParams& gp, const Bytes& gid);

// KDF(GT element) -> 256-bit key, HKDF over the canonical GT encoding.
Bytes derive_dek(const GlobalParams& gp, const Fq2& gt);

struct AttributeSecret {
  Int alpha, y;
};
struct AttributePublic {
  Fq2 e_gg_alpha;  // e(g,g)^alpha
  Point g_y;       // g^y
};

// Per-authority key material, one (alpha,y) pair per managed namespaced
// attribute. Extending with further attributes merges entries.
struct AuthorityKeypair {
  std::string authority_id;
  std::map<std::string, AttributeSecret> secrets;
  std::map<std::string, AttributePublic> publics;
};

// Published authority keys, keyed by namespaced attribute.
using PublicIndex = std::map<std::string, AttributePublic>;

struct UserKeyComponent {
  Bytes gid;
  std::string attribute;  // namespaced
  Point K;                // g^alpha * H(gid)^y
};

struct AbeCiphertext {
  lsss::LsssMatrix matrix;
  std::vector<Fq2> c1;
  std::vector<Point> c2;
  std::vector<Point> c3;
};

AuthorityKeypair authority_setup(const GlobalParams& gp, const std::string& authority_id,
                                 const std::vector<std::string>& attributes, Rng& rng);
// In-place extension with attributes not yet managed.
void authority_extend(const GlobalParams& gp, AuthorityKeypair& kp,
                      const std::vector<std::string>& attributes, Rng& rng);

UserKeyComponent keygen(const GlobalParams& gp, const AuthorityKeypair& authority,
                        const Bytes& gid, const std::string& attribute);

// Test-only visibility into the sampled encryption randomness.
struct EncryptTrace {
  Int s;
  std::vector<Int> v, w;
  std::vector<Int> r;
  std::vector<Int> lambda, omega;
};

struct EncryptResult {
  AbeCiphertext ct;
  Bytes dek;  // 32 bytes
};

EncryptResult encrypt(const GlobalParams& gp, const PublicIndex& publics,
                      const lsss::LsssMatrix& m, Rng& rng, EncryptTrace* trace = nullptr);

// nullopt = Unqualified. Throws MixedGid when components disagree on gid.
std::optional<Bytes> decrypt(const GlobalParams& gp, const Bytes& gid,
                             const std::vector<UserKeyComponent>& components,
                             const AbeCiphertext& ct);

// Wire encodings (canonical JSON values, used by the envelope and the
// authority protocol).
std::string component_to_json(const GlobalParams& gp, const UserKeyComponent& c);
UserKeyComponent component_from_json(const GlobalParams& gp, const std::string& j);
std::string publics_to_json(const GlobalParams& gp, const PublicIndex& publics);
PublicIndex publics_from_json(const GlobalParams& gp, const std::string& j);

}  // namespace martsia::maabe
