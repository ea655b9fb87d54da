#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <set>
#include <optional>
#include <thread>
#include <vector>

#include "martsia/cas.hpp"
#include "martsia/ledger.hpp"
#include "martsia/maabe.hpp"

namespace martsia::authority {

// Wire format: 4-byte big-endian length prefix, then a canonical-JSON
// payload with "type" in {HELLO, CHALLENGE, AUTH, KEY_REQUEST, KEY_RESPONSE,
// ERROR}. Frames above 1 MiB are rejected.
inline constexpr size_t kMaxFrameLen = 1 << 20;

Bytes encode_frame(const nlohmann::json& payload);
// Reads one frame from a connected socket; nullopt on clean EOF.
std::optional<nlohmann::json> read_frame(int fd);
void write_frame(int fd, const nlohmann::json& payload);

// Reader attribute metadata stored in the CAS; the ledger holds its locator.
struct ReaderMetadata {
  std::string address;
  std::vector<std::string> instance_ids;
  std::vector<std::string> attributes;
  std::vector<std::string> certifiers;

  Bytes serialize() const;
  static ReaderMetadata deserialize(const Bytes& b);
};

struct ServiceConfig {
  std::string authority_id;
  uint16_t port = 0;  // 0 = ephemeral
  std::chrono::seconds session_timeout{60};
};

// One authority node: challenge-response authentication of readers against
// their ledger accounts, key issuance over the framed TCP channel, and
// via-ledger delivery of encrypted key blobs. Stateless between sessions
// apart from its attribute secrets; certifications and pubkeys are read
// fresh from ledger + CAS on every request.
class AuthorityService {
 public:
  AuthorityService(ServiceConfig cfg, const maabe::GlobalParams& gp, ledger::LedgerView& led,
                   cas::Store& store, ledger::Account account, Rng rng);
  ~AuthorityService();

  void start();
  void stop();
  uint16_t port() const { return bound_port_; }
  const std::string& authority_id() const { return cfg_.authority_id; }
  const ledger::Account& account() const { return account_; }

  // Issues the reader's certified attribute components for this authority's
  // namespace. Empty requested set means "everything certified".
  std::vector<maabe::UserKeyComponent> issue_components(
      const std::string& reader_address, const std::vector<std::string>& requested = {});

  // Namespaces the given bare attribute names into this authority's
  // namespace, generates any missing key pairs and returns the publics.
  maabe::PublicIndex publish_for(const std::vector<std::string>& bare_attributes);

  // Encrypts the components under the reader's registered encryption key,
  // stores the blob in the CAS and posts its locator on the ledger.
  ledger::Receipt deliver_via_ledger(const std::string& reader_address);

 private:
  void serve_loop();
  void handle_connection(int fd);

  ServiceConfig cfg_;
  const maabe::GlobalParams& gp_;
  ledger::LedgerView& ledger_;
  cas::Store& cas_;
  ledger::Account account_;
  Rng rng_;
  std::mutex rng_mu_;
  maabe::AuthorityKeypair keypair_;
  std::mutex keypair_mu_;

  int listen_fd_ = -1;
  uint16_t bound_port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::vector<std::thread> workers_;
  std::set<int> client_fds_;
  std::mutex workers_mu_;
};

// Client-side helpers.

// Full handshake + key request against one authority. Throws Error with the
// server's ERROR code in the message on protocol failures.
std::vector<maabe::UserKeyComponent> request_keys_direct(
    const maabe::GlobalParams& gp, const std::string& host, uint16_t port,
    const ledger::Account& reader, const std::string& authority_id,
    const std::vector<std::string>& attributes = {});

// Fetches and decrypts the authority's ledger-posted key blobs.
std::vector<maabe::UserKeyComponent> collect_via_ledger(const maabe::GlobalParams& gp,
                                                        const ledger::LedgerView& led,
                                                        const cas::Store& store,
                                                        const ledger::Account& reader,
                                                        const std::string& authority_id);

// Deduplicated union keyed by namespaced attribute; throws MixedGid.
std::vector<maabe::UserKeyComponent> assemble_keys(
    const std::vector<std::vector<maabe::UserKeyComponent>>& responses, const Bytes& gid);

// Deterministic hybrid public-key encryption (X25519 + XSalsa20-Poly1305)
// used for the via-ledger channel.
Bytes seal_for_recipient(const Bytes& recipient_box_pk, const Bytes& plaintext, Rng& rng);
Bytes open_from_sender(const Bytes& recipient_box_pk, const Bytes& recipient_box_sk,
                       const Bytes& blob);

}  // namespace martsia::authority
