#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "martsia/maabe.hpp"

using namespace martsia;
using namespace martsia::maabe;

namespace {

const std::vector<std::string> kUniverse{"A", "B", "C", "D"};

GlobalParams test_gp() { return global_setup(to_bytes("maabe-test"), "a512-test"); }

lsss::LsssMatrix compile(const GlobalParams& gp, const std::string& text) {
  auto f = policy::expand_policy(policy::parse_policy(text), kUniverse);
  return lsss::compile_lsss(f, gp.group().order());
}

// all four authorities managing the full bare-attribute set
std::map<std::string, AuthorityKeypair> setup_network(const GlobalParams& gp,
                                                      const std::vector<std::string>& bare,
                                                      Rng& rng) {
  std::map<std::string, AuthorityKeypair> out;
  for (const auto& id : kUniverse) {
    std::vector<std::string> ns;
    for (const auto& b : bare) ns.push_back(b + "@" + id);
    out.emplace(id, authority_setup(gp, id, ns, rng));
  }
  return out;
}

PublicIndex all_publics(const std::map<std::string, AuthorityKeypair>& net) {
  PublicIndex idx;
  for (const auto& [_, kp] : net) idx.insert(kp.publics.begin(), kp.publics.end());
  return idx;
}

std::vector<UserKeyComponent> issue(const GlobalParams& gp,
                                    const std::map<std::string, AuthorityKeypair>& net,
                                    const Bytes& gid, const std::set<std::string>& attrs) {
  std::vector<UserKeyComponent> out;
  for (const auto& a : attrs) {
    std::string auth = a.substr(a.find('@') + 1);
    out.push_back(keygen(gp, net.at(auth), gid, a));
  }
  return out;
}

}  // namespace

TEST_CASE("global_setup: deterministic, non-degenerate") {
  GlobalParams a = global_setup(to_bytes("test"), "a512-test");
  GlobalParams b = global_setup(to_bytes("test"), "a512-test");
  CHECK(a.serialize() == b.serialize());
  CHECK(global_setup(to_bytes("other"), "a512-test").serialize() != a.serialize());
  const auto& G = a.group();
  CHECK(G.pair(a.g, a.g) != G.gt_one());
  GlobalParams rt = GlobalParams::deserialize(a.serialize());
  CHECK(rt.g == a.g);
  CHECK(rt.curve_id == a.curve_id);
}

TEST_CASE("hash_gid: injective over a scan, not an exponent of g") {
  GlobalParams gp = test_gp();
  const auto& G = gp.group();
  std::set<std::string> seen;
  for (int i = 0; i < 10000; ++i) {
    pairing::Point P = hash_gid(gp, to_bytes("gid-" + std::to_string(i)));
    CHECK(seen.insert(P.x.get_str() + "/" + P.y.get_str()).second);
  }
  // H must not be the exponent shortcut g^sha(gid): that would let
  // colluders recover authority publics from two key components
  for (int i = 0; i < 16; ++i) {
    Bytes gid = to_bytes("probe-" + std::to_string(i));
    pairing::Int e = pairing::int_from_bytes(sha256(gid)) % G.order();
    CHECK(hash_gid(gp, gid) != G.mul(gp.g, e));
  }
}

TEST_CASE("derive_dek: 32 bytes, keyed by the GT element") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("dek"));
  auto x = gp.group().pair(gp.g, gp.g);
  CHECK(derive_dek(gp, x).size() == 32);
  CHECK(derive_dek(gp, x) == derive_dek(gp, x));
  CHECK(derive_dek(gp, x) != derive_dek(gp, gp.group().gt_exp(x, 2)));
}

TEST_CASE("authority_setup: namespacing and merge") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("auth"));
  AuthorityKeypair kp = authority_setup(gp, "A", {"Manufacturer@A"}, rng);
  CHECK(kp.secrets.size() == 1);
  CHECK(kp.publics.count("Manufacturer@A") == 1);
  CHECK_THROWS_AS(authority_setup(gp, "A", {"Supplier@B"}, rng), NamespaceMismatch);

  authority_extend(gp, kp, {"Carrier@A"}, rng);
  CHECK(kp.secrets.size() == 2);
  auto alpha_before = kp.secrets.at("Manufacturer@A").alpha;
  authority_extend(gp, kp, {"Manufacturer@A"}, rng);  // existing entries kept
  CHECK(kp.secrets.size() == 2);
  CHECK(kp.secrets.at("Manufacturer@A").alpha == alpha_before);
}

TEST_CASE("keygen: deterministic, gid-separated, unknown attribute") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("kg"));
  AuthorityKeypair kp = authority_setup(gp, "A", {"x@A"}, rng);
  auto c1 = keygen(gp, kp, to_bytes("gid1"), "x@A");
  auto c2 = keygen(gp, kp, to_bytes("gid1"), "x@A");
  CHECK(c1.K == c2.K);
  std::set<std::string> ks;
  for (int i = 0; i < 50; ++i) {
    auto c = keygen(gp, kp, to_bytes("g" + std::to_string(i)), "x@A");
    ks.insert(hex_encode(gp.group().point_bytes(c.K)));
  }
  CHECK(ks.size() == 50);
  CHECK_THROWS_AS(keygen(gp, kp, to_bytes("gid1"), "y@A"), UnknownAttribute);
}

TEST_CASE("encrypt/decrypt roundtrip, single leaf") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("rt"));
  auto net = setup_network(gp, {"Manufacturer"}, rng);
  auto m = compile(gp, "Manufacturer@A");
  auto enc = encrypt(gp, all_publics(net), m, rng);
  CHECK(enc.dek.size() == 32);
  Bytes gid = to_bytes("reader-1");
  auto ring = issue(gp, net, gid, {"Manufacturer@A"});
  auto dek = decrypt(gp, gid, ring, enc.ct);
  REQUIRE(dek.has_value());
  CHECK(*dek == enc.dek);
}

TEST_CASE("missing authority public") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("mp"));
  auto net = setup_network(gp, {"x"}, rng);
  auto m = compile(gp, "y@A");
  CHECK_THROWS_AS(encrypt(gp, all_publics(net), m, rng), MissingAuthorityPublic);
}

TEST_CASE("full policy: qualified recovers, unqualified does not") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("slice3"));
  auto net = setup_network(gp, {"43175279", "Supplier", "International", "Manufacturer", "Customs"},
                           rng);
  auto m = compile(gp,
                   "(43175279@4+ and ((Supplier@2+ and International@B) or Manufacturer@A))");
  auto enc = encrypt(gp, all_publics(net), m, rng);

  Bytes manu = to_bytes("manufacturer-addr");
  std::set<std::string> manu_attrs{"43175279@A", "43175279@B", "43175279@C", "43175279@D",
                                   "Manufacturer@A"};
  auto dek = decrypt(gp, manu, issue(gp, net, manu, manu_attrs), enc.ct);
  REQUIRE(dek.has_value());
  CHECK(*dek == enc.dek);

  Bytes customs = to_bytes("customs-addr");
  std::set<std::string> customs_attrs{"43175279@A", "43175279@B", "43175279@C", "43175279@D",
                                      "Customs@A", "Customs@B", "Customs@C", "Customs@D"};
  CHECK_FALSE(decrypt(gp, customs, issue(gp, net, customs, customs_attrs), enc.ct).has_value());
}

TEST_CASE("mixed gids rejected") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("mg"));
  auto net = setup_network(gp, {"x", "y"}, rng);
  auto m = compile(gp, "x@A and y@B");
  auto enc = encrypt(gp, all_publics(net), m, rng);
  auto ring = issue(gp, net, to_bytes("g1"), {"x@A"});
  auto other = issue(gp, net, to_bytes("g2"), {"y@B"});
  ring.insert(ring.end(), other.begin(), other.end());
  CHECK_THROWS_AS(decrypt(gp, to_bytes("g1"), ring, enc.ct), MixedGid);
}

TEST_CASE("collusion: pooled unqualified keys never recover the dek") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("collusion"));
  auto net = setup_network(gp, {"x", "y"}, rng);
  auto m = compile(gp, "x@A and y@B");
  for (int trial = 0; trial < 10; ++trial) {
    auto enc = encrypt(gp, all_publics(net), m, rng);
    Bytes g1 = to_bytes("c1-" + std::to_string(trial));
    Bytes g2 = to_bytes("c2-" + std::to_string(trial));
    auto ring = issue(gp, net, g1, {"x@A"});
    for (auto c : issue(gp, net, g2, {"y@B"})) {
      c.gid = g1;  // forged label; K still binds H(g2)
      ring.push_back(c);
    }
    auto dek = decrypt(gp, g1, ring, enc.ct);
    // the omega blinding terms only cancel under a single H(gid)
    CHECK(*dek != enc.dek);
  }
}

TEST_CASE("gid binding: component for gid1 fails under gid2") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("bind"));
  auto net = setup_network(gp, {"x"}, rng);
  auto m = compile(gp, "x@A");
  for (int trial = 0; trial < 10; ++trial) {
    auto enc = encrypt(gp, all_publics(net), m, rng);
    auto ring = issue(gp, net, to_bytes("gid1"), {"x@A"});
    for (auto& c : ring) c.gid = to_bytes("gid2");
    auto dek = decrypt(gp, to_bytes("gid2"), ring, enc.ct);
    CHECK(*dek != enc.dek);
  }
}

TEST_CASE("white-box: per-row share identity from sampled exponents") {
  GlobalParams gp = test_gp();
  const auto& G = gp.group();
  Rng rng(to_bytes("trace"));
  auto net = setup_network(gp, {"x", "y"}, rng);
  auto m = compile(gp, "x@A and (y@B or x@C)");
  EncryptTrace tr;
  auto enc = encrypt(gp, all_publics(net), m, rng, &tr);

  Bytes gid = to_bytes("wb-reader");
  pairing::Point Hgid = hash_gid(gp, gid);
  pairing::Fq2 e_gg = G.pair(gp.g, gp.g);
  pairing::Fq2 e_hg = G.pair(Hgid, gp.g);
  CHECK(tr.w[0] == 0);
  CHECK(derive_dek(gp, G.gt_exp(e_gg, tr.s)) == enc.dek);
  for (size_t x = 0; x < m.rows.size(); ++x) {
    auto comp = keygen(gp, net.at(m.rho[x].substr(m.rho[x].find('@') + 1)), gid, m.rho[x]);
    pairing::Fq2 share = G.gt_mul(
        enc.ct.c1[x], G.gt_mul(G.pair(Hgid, enc.ct.c3[x]),
                               G.gt_inv(G.pair(comp.K, enc.ct.c2[x]))));
    pairing::Fq2 expect =
        G.gt_mul(G.gt_exp(e_gg, tr.lambda[x]), G.gt_exp(e_hg, tr.omega[x]));
    CHECK(share == expect);
  }
}

TEST_CASE("component json roundtrip") {
  GlobalParams gp = test_gp();
  Rng rng(to_bytes("json"));
  AuthorityKeypair kp = authority_setup(gp, "A", {"x@A"}, rng);
  auto c = keygen(gp, kp, to_bytes("gid"), "x@A");
  auto rt = component_from_json(gp, component_to_json(gp, c));
  CHECK(rt.gid == c.gid);
  CHECK(rt.attribute == c.attribute);
  CHECK(rt.K == c.K);
}
