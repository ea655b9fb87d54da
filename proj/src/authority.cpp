#include "martsia/authority.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sodium.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>

#include "martsia/errors.hpp"

namespace martsia::authority {

using nlohmann::json;

Bytes encode_frame(const json& payload) {
  std::string body = payload.dump();
  if (body.size() > kMaxFrameLen) throw NetworkError("frame exceeds 1 MiB");
  Bytes out(4 + body.size());
  uint32_t len = static_cast<uint32_t>(body.size());
  out[0] = static_cast<uint8_t>(len >> 24);
  out[1] = static_cast<uint8_t>(len >> 16);
  out[2] = static_cast<uint8_t>(len >> 8);
  out[3] = static_cast<uint8_t>(len);
  std::memcpy(out.data() + 4, body.data(), body.size());
  return out;
}

namespace {

bool read_exact(int fd, uint8_t* buf, size_t n) {
  size_t got = 0;
  while (got < n) {
    ssize_t r = ::recv(fd, buf + got, n - got, 0);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<size_t>(r);
  }
  return true;
}

void write_all(int fd, const uint8_t* buf, size_t n) {
  size_t sent = 0;
  while (sent < n) {
    ssize_t r = ::send(fd, buf + sent, n - sent, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw NetworkError(std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<size_t>(r);
  }
}

json error_frame(const std::string& code, const std::string& detail) {
  return json{{"code", code}, {"detail", detail}, {"type", "ERROR"}};
}

}  // namespace

std::optional<json> read_frame(int fd) {
  uint8_t hdr[4];
  if (!read_exact(fd, hdr, 4)) return std::nullopt;
  uint32_t len = (uint32_t(hdr[0]) << 24) | (uint32_t(hdr[1]) << 16) | (uint32_t(hdr[2]) << 8) |
                 uint32_t(hdr[3]);
  if (len > kMaxFrameLen) throw NetworkError("incoming frame exceeds 1 MiB");
  Bytes body(len);
  if (!read_exact(fd, body.data(), len)) throw NetworkError("truncated frame");
  try {
    return json::parse(to_string(body));
  } catch (const json::exception& e) {
    throw NetworkError(std::string("malformed frame payload: ") + e.what());
  }
}

void write_frame(int fd, const json& payload) {
  Bytes f = encode_frame(payload);
  write_all(fd, f.data(), f.size());
}

Bytes ReaderMetadata::serialize() const {
  json j{{"address", address},
         {"attributes", attributes},
         {"certifiers", certifiers},
         {"instance_ids", instance_ids}};
  return to_bytes(j.dump());
}

ReaderMetadata ReaderMetadata::deserialize(const Bytes& b) {
  json j = json::parse(to_string(b));
  ReaderMetadata m;
  m.address = j.at("address").get<std::string>();
  m.attributes = j.at("attributes").get<std::vector<std::string>>();
  m.certifiers = j.at("certifiers").get<std::vector<std::string>>();
  m.instance_ids = j.at("instance_ids").get<std::vector<std::string>>();
  return m;
}

AuthorityService::AuthorityService(ServiceConfig cfg, const maabe::GlobalParams& gp,
                                   ledger::LedgerView& led, cas::Store& store,
                                   ledger::Account account, Rng rng)
    : cfg_(std::move(cfg)),
      gp_(gp),
      ledger_(led),
      cas_(store),
      account_(std::move(account)),
      rng_(std::move(rng)) {
  keypair_.authority_id = cfg_.authority_id;
}

AuthorityService::~AuthorityService() { stop(); }

void AuthorityService::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw NetworkError("socket failed");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(cfg_.port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
    throw NetworkError("bind failed on port " + std::to_string(cfg_.port));
  socklen_t alen = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &alen);
  bound_port_ = ntohs(addr.sin_port);
  if (::listen(listen_fd_, 16) != 0) throw NetworkError("listen failed");
  running_ = true;
  accept_thread_ = std::thread([this] { serve_loop(); });
}

void AuthorityService::stop() {
  if (!running_.exchange(false)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  if (accept_thread_.joinable()) accept_thread_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(workers_mu_);
    for (int cfd : client_fds_) ::shutdown(cfd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers)
    if (t.joinable()) t.join();
}

void AuthorityService::serve_loop() {
  while (running_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_) break;
      continue;
    }
    std::lock_guard lock(workers_mu_);
    client_fds_.insert(fd);
    workers_.emplace_back([this, fd] {
      try {
        handle_connection(fd);
      } catch (const std::exception&) {
        // connection-level failure; nothing to clean up beyond the fd
      }
      ::close(fd);
      std::lock_guard l2(workers_mu_);
      client_fds_.erase(fd);
    });
  }
}

std::vector<maabe::UserKeyComponent> AuthorityService::issue_components(
    const std::string& reader_address, const std::vector<std::string>& requested) {
  auto locator = ledger_.query_attributes(reader_address);
  if (!locator) throw ProtocolError("not-certified", "no finalized certification for reader");
  ReaderMetadata meta = ReaderMetadata::deserialize(cas_.get(cas::Locator{*locator}));
  if (meta.address != reader_address)
    throw ProtocolError("not-certified", "metadata address mismatch");

  std::vector<std::string> certified = meta.attributes;
  certified.insert(certified.end(), meta.instance_ids.begin(), meta.instance_ids.end());

  const std::string suffix = "@" + cfg_.authority_id;
  std::vector<std::string> to_issue;
  for (const auto& name : certified) {
    std::string namespaced = name + suffix;
    if (!requested.empty()) {
      bool wanted = false;
      for (const auto& r : requested)
        if (r == name || r == namespaced) wanted = true;
      if (!wanted) continue;  // silently omitted
    }
    to_issue.push_back(namespaced);
  }

  Bytes gid = to_bytes(reader_address);
  std::vector<maabe::UserKeyComponent> out;
  {
    std::lock_guard klock(keypair_mu_);
    {
      std::lock_guard rlock(rng_mu_);
      maabe::authority_extend(gp_, keypair_, to_issue, rng_);
    }
    for (const auto& attr : to_issue) out.push_back(maabe::keygen(gp_, keypair_, gid, attr));
  }
  return out;
}

maabe::PublicIndex AuthorityService::publish_for(const std::vector<std::string>& bare_attributes) {
  std::vector<std::string> namespaced;
  for (const auto& name : bare_attributes) namespaced.push_back(name + "@" + cfg_.authority_id);
  maabe::PublicIndex out;
  std::lock_guard klock(keypair_mu_);
  {
    std::lock_guard rlock(rng_mu_);
    maabe::authority_extend(gp_, keypair_, namespaced, rng_);
  }
  for (const auto& attr : namespaced) out.emplace(attr, keypair_.publics.at(attr));
  return out;
}

ledger::Receipt AuthorityService::deliver_via_ledger(const std::string& reader_address) {
  auto pk_b64 = ledger_.enc_pubkey_of(reader_address);
  if (!pk_b64) throw NoRegisteredKey("reader " + reader_address + " has no registered key");
  auto components = issue_components(reader_address);
  json arr = json::array();
  for (const auto& c : components) arr.push_back(json::parse(maabe::component_to_json(gp_, c)));
  Bytes blob;
  {
    std::lock_guard rlock(rng_mu_);
    blob = seal_for_recipient(b64url_decode(*pk_b64), to_bytes(arr.dump()), rng_);
  }
  cas::Locator loc = cas_.put(blob);
  return ledger_.submit(ledger::make_tx(account_, "PostKeyMaterial",
                                        json{{"authority_id", cfg_.authority_id},
                                             {"locator", loc.text},
                                             {"reader", reader_address}}));
}

void AuthorityService::handle_connection(int fd) {
  struct Session {
    std::string session_id;
    std::string address;
    Bytes nonce;
    bool authenticated = false;
    std::chrono::steady_clock::time_point last_activity;
  };
  std::optional<Session> session;

  while (running_) {
    auto frame = read_frame(fd);
    if (!frame) return;
    std::string type = frame->value("type", "");
    auto now = std::chrono::steady_clock::now();
    if (session && now - session->last_activity > cfg_.session_timeout) {
      write_frame(fd, error_frame("expired", "session idle timeout"));
      session.reset();
      continue;
    }
    if (session) session->last_activity = now;

    if (type == "HELLO") {
      std::string address = frame->value("address", "");
      if (address.empty()) {
        write_frame(fd, error_frame("unknown-address", "missing address"));
        continue;
      }
      Session s;
      {
        std::lock_guard rlock(rng_mu_);
        s.session_id = b64url_encode(rng_.bytes(16));
        s.nonce = rng_.bytes(32);
      }
      s.address = address;
      s.last_activity = now;
      json challenge{{"nonce", b64url_encode(s.nonce)},
                     {"session_id", s.session_id},
                     {"type", "CHALLENGE"}};
      session = std::move(s);
      write_frame(fd, challenge);
    } else if (type == "AUTH") {
      if (!session || frame->value("session_id", "") != session->session_id) {
        write_frame(fd, error_frame("expired", "no such session"));
        continue;
      }
      auto pk_b64 = ledger_.sign_pubkey_of(session->address);
      if (!pk_b64) {
        write_frame(fd, error_frame("unknown-address",
                                    "no public key on ledger for " + session->address));
        continue;
      }
      Bytes pk = b64url_decode(*pk_b64);
      Bytes sig;
      try {
        sig = b64url_decode(frame->value("signature", ""));
      } catch (const std::exception&) {
        write_frame(fd, error_frame("bad-signature", "undecodable signature"));
        continue;
      }
      // the signed payload binds the authority id, so an AUTH captured at
      // one authority cannot be replayed at another
      Bytes msg = session->nonce;
      Bytes aid = to_bytes(cfg_.authority_id);
      msg.insert(msg.end(), aid.begin(), aid.end());
      if (sig.size() != crypto_sign_BYTES || pk.size() != crypto_sign_PUBLICKEYBYTES ||
          crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), pk.data()) != 0) {
        write_frame(fd, error_frame("bad-signature", "nonce signature invalid"));
        continue;
      }
      session->authenticated = true;
      write_frame(fd, json{{"ok", true}, {"session_id", session->session_id}, {"type", "AUTH"}});
    } else if (type == "KEY_REQUEST") {
      if (!session || !session->authenticated ||
          frame->value("session_id", "") != session->session_id) {
        write_frame(fd, error_frame("bad-signature", "session not authenticated"));
        continue;
      }
      std::vector<std::string> requested;
      if (frame->contains("attributes"))
        requested = frame->at("attributes").get<std::vector<std::string>>();
      try {
        auto components = issue_components(session->address, requested);
        json arr = json::array();
        for (const auto& c : components)
          arr.push_back(json::parse(maabe::component_to_json(gp_, c)));
        write_frame(fd, json{{"components", arr}, {"type", "KEY_RESPONSE"}});
      } catch (const ProtocolError& e) {
        write_frame(fd, error_frame(e.code, e.what()));
      } catch (const std::exception& e) {
        write_frame(fd, error_frame("internal", e.what()));
      }
    } else {
      write_frame(fd, error_frame("unsupported", "unknown frame type " + type));
    }
  }
}

namespace {

int connect_loopback(const std::string& host, uint16_t port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw NetworkError("socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw NetworkError("bad host " + host);
  }
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(fd);
    throw NetworkError("cannot connect to " + host + ":" + std::to_string(port));
  }
  return fd;
}

struct FdCloser {
  int fd;
  ~FdCloser() { ::close(fd); }
};

json expect_frame(int fd, const std::string& want_type) {
  auto f = read_frame(fd);
  if (!f) throw NetworkError("connection closed by authority");
  std::string type = f->value("type", "");
  if (type == "ERROR") throw ProtocolError(f->value("code", "unknown"), f->value("detail", ""));
  if (type != want_type) throw NetworkError("unexpected frame type " + type);
  return *f;
}

}  // namespace

std::vector<maabe::UserKeyComponent> request_keys_direct(
    const maabe::GlobalParams& gp, const std::string& host, uint16_t port,
    const ledger::Account& reader, const std::string& authority_id,
    const std::vector<std::string>& attributes) {
  int fd = connect_loopback(host, port);
  FdCloser closer{fd};

  write_frame(fd, json{{"address", reader.address}, {"type", "HELLO"}});
  json challenge = expect_frame(fd, "CHALLENGE");
  std::string session_id = challenge.at("session_id").get<std::string>();
  Bytes msg = b64url_decode(challenge.at("nonce").get<std::string>());
  Bytes aid = to_bytes(authority_id);
  msg.insert(msg.end(), aid.begin(), aid.end());
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), reader.sign_sk.data());
  write_frame(fd, json{{"session_id", session_id},
                       {"signature", b64url_encode(sig)},
                       {"type", "AUTH"}});
  expect_frame(fd, "AUTH");

  json req{{"session_id", session_id}, {"type", "KEY_REQUEST"}};
  if (!attributes.empty()) req["attributes"] = attributes;
  write_frame(fd, req);
  json resp = expect_frame(fd, "KEY_RESPONSE");
  std::vector<maabe::UserKeyComponent> out;
  for (const auto& c : resp.at("components"))
    out.push_back(maabe::component_from_json(gp, c.dump()));
  return out;
}

std::vector<maabe::UserKeyComponent> collect_via_ledger(const maabe::GlobalParams& gp,
                                                        const ledger::LedgerView& led,
                                                        const cas::Store& store,
                                                        const ledger::Account& reader,
                                                        const std::string& authority_id) {
  std::vector<maabe::UserKeyComponent> out;
  for (const auto& loc : led.key_postings_for(authority_id, reader.address)) {
    Bytes blob = store.get(cas::Locator{loc});
    Bytes plain = open_from_sender(reader.box_pk, reader.box_sk, blob);
    for (const auto& c : json::parse(to_string(plain)))
      out.push_back(maabe::component_from_json(gp, c.dump()));
  }
  return out;
}

std::vector<maabe::UserKeyComponent> assemble_keys(
    const std::vector<std::vector<maabe::UserKeyComponent>>& responses, const Bytes& gid) {
  std::map<std::string, maabe::UserKeyComponent> by_attr;
  for (const auto& resp : responses)
    for (const auto& c : resp) {
      if (c.gid != gid) throw MixedGid("component for foreign gid in keyring");
      by_attr.insert_or_assign(c.attribute, c);  // latest issuance wins
    }
  std::vector<maabe::UserKeyComponent> out;
  out.reserve(by_attr.size());
  for (auto& [_, c] : by_attr) out.push_back(std::move(c));
  return out;
}

Bytes seal_for_recipient(const Bytes& recipient_box_pk, const Bytes& plaintext, Rng& rng) {
  Bytes eph_seed = rng.bytes(crypto_box_SEEDBYTES);
  Bytes eph_pk(crypto_box_PUBLICKEYBYTES), eph_sk(crypto_box_SECRETKEYBYTES);
  crypto_box_seed_keypair(eph_pk.data(), eph_sk.data(), eph_seed.data());
  Bytes nonce = rng.bytes(crypto_box_NONCEBYTES);
  Bytes ct(plaintext.size() + crypto_box_MACBYTES);
  if (crypto_box_easy(ct.data(), plaintext.data(), plaintext.size(), nonce.data(),
                      recipient_box_pk.data(), eph_sk.data()) != 0)
    throw Error("hybrid encryption failed");
  Bytes out = eph_pk;
  out.insert(out.end(), nonce.begin(), nonce.end());
  out.insert(out.end(), ct.begin(), ct.end());
  return out;
}

Bytes open_from_sender(const Bytes&, const Bytes& recipient_box_sk, const Bytes& blob) {
  size_t hdr = crypto_box_PUBLICKEYBYTES + crypto_box_NONCEBYTES;
  if (blob.size() < hdr + crypto_box_MACBYTES) throw IntegrityError("key blob too short");
  Bytes eph_pk(blob.begin(), blob.begin() + crypto_box_PUBLICKEYBYTES);
  Bytes nonce(blob.begin() + crypto_box_PUBLICKEYBYTES, blob.begin() + hdr);
  Bytes ct(blob.begin() + hdr, blob.end());
  Bytes out(ct.size() - crypto_box_MACBYTES);
  if (crypto_box_open_easy(out.data(), ct.data(), ct.size(), nonce.data(), eph_pk.data(),
                           recipient_box_sk.data()) != 0)
    throw IntegrityError("key blob decryption failed");
  return out;
}

}  // namespace martsia::authority
