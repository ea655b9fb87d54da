#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sodium.h>
#include <sys/socket.h>
#include <unistd.h>

#include <set>

#include "martsia/authority.hpp"
#include "martsia/envelope.hpp"
#include "martsia/errors.hpp"

using namespace martsia;
using namespace martsia::authority;
using nlohmann::json;

namespace {

ledger::Account mk_acct(const std::string& label) {
  return ledger::Account::from_seed(sha256(to_bytes(label)));
}

int connect_to(uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);
  return fd;
}

// One authority "A" over an in-process ledger and store, with one certified
// reader holding {Manufacturer, Supplier} plus instance id 43175279.
struct Fixture {
  maabe::GlobalParams gp = maabe::global_setup(to_bytes("auth-test"), "a512-test");
  ledger::Account certifier = mk_acct("certifier");
  ledger::Account reader = mk_acct("reader");
  ledger::Account stranger = mk_acct("stranger");
  ledger::Ledger led;
  cas::MemoryStore store;
  std::unique_ptr<AuthorityService> svc;

  explicit Fixture(std::chrono::seconds timeout = std::chrono::seconds(60))
      : led([&] {
          ledger::Ledger::Config cfg;
          cfg.certifiers = {certifier.address};
          return cfg;
        }()) {
    led.submit(ledger::make_tx(reader, "RegisterPubKey",
                               json{{"enc_pubkey", b64url_encode(reader.box_pk)}}));
    ReaderMetadata meta;
    meta.address = reader.address;
    meta.instance_ids = {"43175279"};
    meta.attributes = {"Manufacturer", "Supplier"};
    meta.certifiers = {certifier.address};
    led.certify(certifier, reader.address, store.put(meta.serialize()).text);

    svc = std::make_unique<AuthorityService>(ServiceConfig{"A", 0, timeout}, gp, led, store,
                                             mk_acct("authority-A"), Rng(to_bytes("rng-A")));
    // fix the secret-generation order before any request arrives
    svc->publish_for({"43175279", "Customs", "Manufacturer", "Supplier"});
    svc->start();
  }

  std::set<std::string> attr_names(const std::vector<maabe::UserKeyComponent>& cs) const {
    std::set<std::string> out;
    for (const auto& c : cs) out.insert(c.attribute);
    return out;
  }
};

}  // namespace

TEST_CASE("frames: length prefix, roundtrip, eof, oversize") {
  json msg{{"type", "HELLO"}, {"address", "abc"}};
  Bytes f = encode_frame(msg);
  std::string body = msg.dump();
  REQUIRE(f.size() == 4 + body.size());
  uint32_t len = (uint32_t(f[0]) << 24) | (uint32_t(f[1]) << 16) | (uint32_t(f[2]) << 8) |
                 uint32_t(f[3]);
  CHECK(len == body.size());
  CHECK(std::string(f.begin() + 4, f.end()) == body);

  int sp[2];
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, sp) == 0);
  write_frame(sp[0], msg);
  auto got = read_frame(sp[1]);
  REQUIRE(got.has_value());
  CHECK(*got == msg);

  // truncated body
  ::send(sp[0], f.data(), f.size() - 2, 0);
  ::shutdown(sp[0], SHUT_WR);
  CHECK_THROWS_AS(read_frame(sp[1]), NetworkError);
  ::close(sp[0]);
  ::close(sp[1]);

  // clean EOF before a header
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, sp) == 0);
  ::shutdown(sp[0], SHUT_WR);
  CHECK_FALSE(read_frame(sp[1]).has_value());
  ::close(sp[0]);
  ::close(sp[1]);

  // declared length above the cap is rejected before any body read
  REQUIRE(::socketpair(AF_UNIX, SOCK_STREAM, 0, sp) == 0);
  uint8_t hdr[4] = {0x00, 0x20, 0x00, 0x01};  // 2 MiB + 1
  ::send(sp[0], hdr, 4, 0);
  CHECK_THROWS_AS(read_frame(sp[1]), NetworkError);
  ::close(sp[0]);
  ::close(sp[1]);

  json big{{"blob", std::string(kMaxFrameLen, 'x')}};
  CHECK_THROWS_AS(encode_frame(big), NetworkError);
}

TEST_CASE("reader metadata roundtrip") {
  ReaderMetadata m;
  m.address = std::string(40, 'a');
  m.instance_ids = {"43175279"};
  m.attributes = {"Manufacturer", "Supplier"};
  m.certifiers = {std::string(40, 'b'), std::string(40, 'c')};
  ReaderMetadata rt = ReaderMetadata::deserialize(m.serialize());
  CHECK(rt.address == m.address);
  CHECK(rt.instance_ids == m.instance_ids);
  CHECK(rt.attributes == m.attributes);
  CHECK(rt.certifiers == m.certifiers);
  CHECK_THROWS(ReaderMetadata::deserialize(to_bytes("{}")));
}

TEST_CASE("handshake and key issuance for a certified reader") {
  Fixture fx;
  auto comps = request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), fx.reader, "A");
  CHECK(fx.attr_names(comps) ==
        std::set<std::string>{"43175279@A", "Manufacturer@A", "Supplier@A"});
  for (const auto& c : comps) CHECK(c.gid == to_bytes(fx.reader.address));

  // issuance over the channel matches direct in-process issuance
  auto direct = fx.svc->issue_components(fx.reader.address);
  REQUIRE(direct.size() == comps.size());
  std::map<std::string, maabe::UserKeyComponent> by_attr;
  for (const auto& c : direct) by_attr.emplace(c.attribute, c);
  for (const auto& c : comps) CHECK(by_attr.at(c.attribute).K == c.K);
}

TEST_CASE("requested attributes outside the certification are silently omitted") {
  Fixture fx;
  auto comps = request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), fx.reader, "A",
                                   {"Manufacturer", "Customs", "nonsense@@"});
  CHECK(fx.attr_names(comps) == std::set<std::string>{"Manufacturer@A"});
  // namespaced request form is accepted too
  auto comps2 = request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), fx.reader, "A",
                                    {"Supplier@A"});
  CHECK(fx.attr_names(comps2) == std::set<std::string>{"Supplier@A"});
}

TEST_CASE("issuance soundness: issued set is always within the certification") {
  Fixture fx;
  std::set<std::string> certified{"43175279@A", "Manufacturer@A", "Supplier@A"};
  Rng rng(to_bytes("fuzz"));
  std::vector<std::string> pool{"Manufacturer", "Supplier", "Customs", "Carrier",
                                "43175279", "Manufacturer@A", "Customs@B", "x", ""};
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::string> req;
    for (const auto& p : pool)
      if (rng.bytes(1)[0] & 1) req.push_back(p);
    auto comps = fx.svc->issue_components(fx.reader.address, req);
    for (const auto& c : comps) CHECK(certified.count(c.attribute) == 1);
  }
}

TEST_CASE("auth binds the authority id: signature for B fails at A") {
  Fixture fx;
  CHECK_THROWS_AS(request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), fx.reader, "B"),
                  ProtocolError);
  try {
    request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), fx.reader, "B");
  } catch (const ProtocolError& e) {
    CHECK(e.code == "bad-signature");
  }
}

TEST_CASE("garbage signature rejected") {
  Fixture fx;
  int fd = connect_to(fx.svc->port());
  write_frame(fd, json{{"address", fx.reader.address}, {"type", "HELLO"}});
  auto ch = read_frame(fd);
  REQUIRE(ch.has_value());
  CHECK((*ch)["type"] == "CHALLENGE");
  write_frame(fd, json{{"session_id", (*ch)["session_id"]},
                       {"signature", b64url_encode(Bytes(64, 0x42))},
                       {"type", "AUTH"}});
  auto err = read_frame(fd);
  REQUIRE(err.has_value());
  CHECK((*err)["type"] == "ERROR");
  CHECK((*err)["code"] == "bad-signature");
  ::close(fd);
}

TEST_CASE("key request before authentication rejected") {
  Fixture fx;
  int fd = connect_to(fx.svc->port());
  write_frame(fd, json{{"address", fx.reader.address}, {"type", "HELLO"}});
  auto ch = read_frame(fd);
  REQUIRE(ch.has_value());
  write_frame(fd, json{{"session_id", (*ch)["session_id"]}, {"type", "KEY_REQUEST"}});
  auto err = read_frame(fd);
  REQUIRE(err.has_value());
  CHECK((*err)["type"] == "ERROR");
  CHECK((*err)["code"] == "bad-signature");
  ::close(fd);
}

TEST_CASE("unknown frame type and unknown address") {
  Fixture fx;
  int fd = connect_to(fx.svc->port());
  write_frame(fd, json{{"type", "PING"}});
  auto err = read_frame(fd);
  REQUIRE(err.has_value());
  CHECK((*err)["code"] == "unsupported");
  write_frame(fd, json{{"type", "HELLO"}});  // no address
  err = read_frame(fd);
  REQUIRE(err.has_value());
  CHECK((*err)["code"] == "unknown-address");
  ::close(fd);

  // an account that never touched the ledger has no signing key to verify
  try {
    request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), fx.stranger, "A");
    FAIL("expected error");
  } catch (const ProtocolError& e) {
    CHECK(e.code == "unknown-address");
  }
}

TEST_CASE("uncertified reader gets not-certified") {
  Fixture fx;
  ledger::Account other = mk_acct("other");
  fx.led.submit(ledger::make_tx(other, "RegisterPubKey",
                                json{{"enc_pubkey", b64url_encode(other.box_pk)}}));
  try {
    request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), other, "A");
    FAIL("expected error");
  } catch (const ProtocolError& e) {
    CHECK(e.code == "not-certified");
  }
  CHECK_THROWS_AS(fx.svc->issue_components(other.address), ProtocolError);
}

TEST_CASE("idle sessions expire") {
  Fixture fx(std::chrono::seconds(0));
  int fd = connect_to(fx.svc->port());
  write_frame(fd, json{{"address", fx.reader.address}, {"type", "HELLO"}});
  auto ch = read_frame(fd);
  REQUIRE(ch.has_value());
  write_frame(fd, json{{"session_id", (*ch)["session_id"]}, {"type", "KEY_REQUEST"}});
  auto err = read_frame(fd);
  REQUIRE(err.has_value());
  CHECK((*err)["code"] == "expired");
  ::close(fd);
}

TEST_CASE("via-ledger delivery: same components, bound to the reader's key") {
  Fixture fx;
  fx.svc->deliver_via_ledger(fx.reader.address);
  auto via = collect_via_ledger(fx.gp, fx.led, fx.store, fx.reader, "A");
  CHECK(fx.attr_names(via) ==
        std::set<std::string>{"43175279@A", "Manufacturer@A", "Supplier@A"});
  auto direct = fx.svc->issue_components(fx.reader.address);
  std::map<std::string, maabe::UserKeyComponent> by_attr;
  for (const auto& c : direct) by_attr.emplace(c.attribute, c);
  for (const auto& c : via) CHECK(by_attr.at(c.attribute).K == c.K);

  // a third party holding the blob cannot open it
  auto postings = fx.led.key_postings_for("A", fx.reader.address);
  REQUIRE(postings.size() == 1);
  Bytes blob = fx.store.get(cas::Locator{postings[0]});
  CHECK_THROWS_AS(open_from_sender(fx.stranger.box_pk, fx.stranger.box_sk, blob),
                  IntegrityError);

  // no registered encryption key -> no delivery
  ledger::Account other = mk_acct("other");
  ReaderMetadata meta;
  meta.address = other.address;
  meta.attributes = {"Supplier"};
  meta.certifiers = {fx.certifier.address};
  fx.led.certify(fx.certifier, other.address, fx.store.put(meta.serialize()).text);
  CHECK_THROWS_AS(fx.svc->deliver_via_ledger(other.address), NoRegisteredKey);
}

TEST_CASE("assemble: dedupe by attribute, foreign gid rejected") {
  Fixture fx;
  auto a = fx.svc->issue_components(fx.reader.address);
  auto b = fx.svc->issue_components(fx.reader.address);
  Bytes gid = to_bytes(fx.reader.address);
  auto merged = assemble_keys({a, b}, gid);
  CHECK(merged.size() == a.size());

  auto foreign = a;
  foreign[0].gid = to_bytes("someone-else");
  CHECK_THROWS_AS(assemble_keys({a, foreign}, gid), MixedGid);
}

TEST_CASE("hybrid blob: deterministic under a seeded rng, tamper-evident") {
  ledger::Account r = mk_acct("recipient");
  Bytes msg = to_bytes("key material");
  Rng rng1(to_bytes("pke"));
  Rng rng2(to_bytes("pke"));
  Bytes b1 = seal_for_recipient(r.box_pk, msg, rng1);
  Bytes b2 = seal_for_recipient(r.box_pk, msg, rng2);
  CHECK(b1 == b2);
  CHECK(open_from_sender(r.box_pk, r.box_sk, b1) == msg);
  for (size_t pos : {size_t(0), b1.size() / 2, b1.size() - 1}) {
    Bytes bad = b1;
    bad[pos] ^= 0x01;
    CHECK_THROWS_AS(open_from_sender(r.box_pk, r.box_sk, bad), IntegrityError);
  }
  CHECK_THROWS_AS(open_from_sender(r.box_pk, r.box_sk, Bytes(10, 0)), IntegrityError);
}

TEST_CASE("channel equivalence: both keyrings open the same slice") {
  Fixture fx;
  maabe::PublicIndex publics;
  std::vector<std::string> bare{"43175279", "Customs", "Manufacturer", "Supplier"};
  auto idx = fx.svc->publish_for(bare);
  publics.insert(idx.begin(), idx.end());
  // remaining authorities exist only to satisfy the instance threshold
  std::vector<std::unique_ptr<AuthorityService>> others;
  for (const std::string id : {"B", "C", "D"}) {
    auto s = std::make_unique<AuthorityService>(ServiceConfig{id, 0}, fx.gp, fx.led, fx.store,
                                                mk_acct("authority-" + id),
                                                Rng(to_bytes("rng-" + id)));
    auto pi = s->publish_for(bare);
    publics.insert(pi.begin(), pi.end());
    others.push_back(std::move(s));
  }

  std::vector<envelope::SliceSpec> slices{{1, to_bytes("secret"), "Manufacturer@A"}};
  Rng seal_rng(to_bytes("seal"));
  auto env = envelope::seal_message(slices, "43175279", {"A", "B", "C", "D"}, publics, fx.gp,
                                    "sender", seal_rng);

  auto direct = request_keys_direct(fx.gp, "127.0.0.1", fx.svc->port(), fx.reader, "A");
  fx.svc->deliver_via_ledger(fx.reader.address);
  auto via = collect_via_ledger(fx.gp, fx.led, fx.store, fx.reader, "A");
  for (auto& s : others) {
    auto extra = s->issue_components(fx.reader.address);
    direct.insert(direct.end(), extra.begin(), extra.end());
    via.insert(via.end(), extra.begin(), extra.end());
  }
  Bytes gid = to_bytes(fx.reader.address);
  auto p1 = envelope::open_slice(fx.gp, env, env.slices[0].slice_id, gid,
                                 assemble_keys({direct}, gid));
  auto p2 = envelope::open_slice(fx.gp, env, env.slices[0].slice_id, gid,
                                 assemble_keys({via}, gid));
  REQUIRE(p1.has_value());
  REQUIRE(p2.has_value());
  CHECK(*p1 == *p2);
  CHECK(*p1 == to_bytes("secret"));
}
