#include "martsia/maabe.hpp"

#include <nlohmann/json.hpp>

#include <mutex>
#include <unordered_map>

#include "martsia/errors.hpp"

namespace martsia::maabe {

using nlohmann::json;

const pairing::Group& GlobalParams::group() const {
  static std::mutex mu;
  static std::unordered_map<std::string, std::unique_ptr<pairing::Group>> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(curve_id);
  if (it == cache.end())
    it = cache.emplace(curve_id, std::make_unique<pairing::Group>(pairing::params_by_id(curve_id)))
             .first;
  return *it->second;
}

Bytes GlobalParams::serialize() const {
  const auto& G = group();
  json j{{"curve", curve_id},
         {"seed", b64url_encode(seed)},
         {"g", b64url_encode(G.point_bytes(g))}};
  return to_bytes(j.dump());
}

GlobalParams GlobalParams::deserialize(const Bytes& b) {
  json j = json::parse(to_string(b));
  GlobalParams gp;
  gp.curve_id = j.at("curve").get<std::string>();
  gp.seed = b64url_decode(j.at("seed").get<std::string>());
  gp.g = gp.group().point_from_bytes(b64url_decode(j.at("g").get<std::string>()));
  return gp;
}

GlobalParams global_setup(const Bytes& seed, const std::string& curve_id) {
  GlobalParams gp;
  gp.curve_id = curve_id;
  gp.seed = seed;
  gp.g = gp.group().hash_to_group(seed, "martsia/gen/v1");
  return gp;
}

Point hash_gid(const GlobalParams& gp, const Bytes& gid) {
  return gp.group().hash_to_group(gid, "martsia/h2g/v1");
}

Bytes derive_dek(const GlobalParams& gp, const Fq2& gt) {
  return hkdf_sha256(gp.group().gt_bytes(gt), {}, to_bytes("martsia/dek/v1"), 32);
}

AuthorityKeypair authority_setup(const GlobalParams& gp, const std::string& authority_id,
                                 const std::vector<std::string>& attributes, Rng& rng) {
  AuthorityKeypair kp;
  kp.authority_id = authority_id;
  authority_extend(gp, kp, attributes, rng);
  return kp;
}

void authority_extend(const GlobalParams& gp, AuthorityKeypair& kp,
                      const std::vector<std::string>& attributes, Rng& rng) {
  const auto& G = gp.group();
  const std::string suffix = "@" + kp.authority_id;
  Fq2 e_gg = G.pair(gp.g, gp.g);
  for (const auto& attr : attributes) {
    if (attr.size() <= suffix.size() ||
        attr.compare(attr.size() - suffix.size(), suffix.size(), suffix) != 0)
      throw NamespaceMismatch("attribute " + attr + " not in namespace of authority " +
                              kp.authority_id);
    if (kp.secrets.count(attr)) continue;
    AttributeSecret sec{G.random_scalar(rng), G.random_scalar(rng)};
    AttributePublic pub{G.gt_exp(e_gg, sec.alpha), G.mul(gp.g, sec.y)};
    kp.secrets.emplace(attr, sec);
    kp.publics.emplace(attr, pub);
  }
}

UserKeyComponent keygen(const GlobalParams& gp, const AuthorityKeypair& authority,
                        const Bytes& gid, const std::string& attribute) {
  auto it = authority.secrets.find(attribute);
  if (it == authority.secrets.end())
    throw UnknownAttribute("authority " + authority.authority_id + " does not manage " +
                           attribute);
  const auto& G = gp.group();
  Point K = G.add(G.mul(gp.g, it->second.alpha), G.mul(hash_gid(gp, gid), it->second.y));
  return UserKeyComponent{gid, attribute, K};
}

EncryptResult encrypt(const GlobalParams& gp, const PublicIndex& publics,
                      const lsss::LsssMatrix& m, Rng& rng, EncryptTrace* trace) {
  const auto& G = gp.group();
  for (const auto& attr : m.rho)
    if (!publics.count(attr))
      throw MissingAuthorityPublic("no published authority key for " + attr);

  const Int& p = G.order();
  auto scalar = [&] { return G.random_scalar(rng); };
  Int s = scalar();
  std::vector<Int> v(m.width), w(m.width);
  v[0] = s;
  w[0] = 0;
  for (size_t j = 1; j < m.width; ++j) v[j] = scalar();
  for (size_t j = 1; j < m.width; ++j) w[j] = scalar();

  Fq2 e_gg = G.pair(gp.g, gp.g);
  AbeCiphertext ct;
  ct.matrix = m;
  EncryptTrace tr;
  tr.s = s;
  tr.v = v;
  tr.w = w;
  for (size_t x = 0; x < m.rows.size(); ++x) {
    Int lambda = 0, omega = 0;
    for (size_t j = 0; j < m.width; ++j) {
      lambda += m.rows[x][j] * v[j];
      omega += m.rows[x][j] * w[j];
    }
    lambda %= p;
    if (lambda < 0) lambda += p;
    omega %= p;
    if (omega < 0) omega += p;
    Int r_x = scalar();
    const auto& pub = publics.at(m.rho[x]);
    ct.c1.push_back(G.gt_mul(G.gt_exp(e_gg, lambda), G.gt_exp(pub.e_gg_alpha, r_x)));
    ct.c2.push_back(G.mul(gp.g, r_x));
    ct.c3.push_back(G.add(G.mul(pub.g_y, r_x), G.mul(gp.g, omega)));
    tr.r.push_back(r_x);
    tr.lambda.push_back(lambda);
    tr.omega.push_back(omega);
  }
  if (trace) *trace = tr;
  return EncryptResult{std::move(ct), derive_dek(gp, G.gt_exp(e_gg, s))};
}

std::optional<Bytes> decrypt(const GlobalParams& gp, const Bytes& gid,
                             const std::vector<UserKeyComponent>& components,
                             const AbeCiphertext& ct) {
  std::map<std::string, const UserKeyComponent*> by_attr;
  for (const auto& c : components) {
    if (c.gid != gid) throw MixedGid("key component bound to a different gid");
    by_attr.emplace(c.attribute, &c);
  }
  std::set<std::string> owned;
  for (const auto& [attr, _] : by_attr) owned.insert(attr);

  auto plan = lsss::reconstruction_coefficients(ct.matrix, owned);
  if (!plan) return std::nullopt;

  const auto& G = gp.group();
  Point h_gid = hash_gid(gp, gid);
  Fq2 acc = G.gt_one();
  for (const auto& [x, coeff] : plan->coefficients) {
    const auto& comp = *by_attr.at(ct.matrix.rho[x]);
    // share_x = C1_x * e(H(gid), C3_x) / e(K, C2_x) = e(g,g)^lambda_x * e(H(gid),g)^omega_x
    Fq2 share = G.gt_mul(ct.c1[x], G.gt_mul(G.pair(h_gid, ct.c3[x]),
                                            G.gt_inv(G.pair(comp.K, ct.c2[x]))));
    acc = G.gt_mul(acc, G.gt_exp(share, coeff));
  }
  return derive_dek(gp, acc);
}

std::string component_to_json(const GlobalParams& gp, const UserKeyComponent& c) {
  json j{{"gid", b64url_encode(c.gid)},
         {"attribute", c.attribute},
         {"k", b64url_encode(gp.group().point_bytes(c.K))}};
  return j.dump();
}

std::string publics_to_json(const GlobalParams& gp, const PublicIndex& publics) {
  const auto& G = gp.group();
  json j = json::object();
  for (const auto& [attr, pub] : publics)
    j[attr] = json{{"e_gg_alpha", b64url_encode(G.gt_bytes(pub.e_gg_alpha))},
                   {"g_y", b64url_encode(G.point_bytes(pub.g_y))}};
  return j.dump();
}

PublicIndex publics_from_json(const GlobalParams& gp, const std::string& s) {
  const auto& G = gp.group();
  PublicIndex out;
  json j = json::parse(s);
  for (const auto& [attr, pub] : j.items())
    out.emplace(attr,
                AttributePublic{G.gt_from_bytes(b64url_decode(pub.at("e_gg_alpha").get<std::string>())),
                                G.point_from_bytes(b64url_decode(pub.at("g_y").get<std::string>()))});
  return out;
}

UserKeyComponent component_from_json(const GlobalParams& gp, const std::string& s) {
  json j = json::parse(s);
  UserKeyComponent c;
  c.gid = b64url_decode(j.at("gid").get<std::string>());
  c.attribute = j.at("attribute").get<std::string>();
  c.K = gp.group().point_from_bytes(b64url_decode(j.at("k").get<std::string>()));
  return c;
}

}  // namespace martsia::maabe
