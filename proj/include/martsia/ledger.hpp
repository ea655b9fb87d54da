#pragma once

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "martsia/common.hpp"

namespace martsia::ledger {

// Ed25519 signing identity plus an X25519 encryption key that can be
// registered on chain for via-ledger key delivery. The address is the first
// 20 bytes of sha256(signing pubkey), lowercase hex.
struct Account {
  Bytes sign_pk, sign_sk;
  Bytes box_pk, box_sk;
  std::string address;

  static Account from_seed(const Bytes& seed);
};

std::string address_of(const Bytes& sign_pk);

struct Transaction {
  std::string type;  // RecordMessage | Certify | RegisterPubKey | PostKeyMaterial
  std::string sender;
  std::string scheme = "ed25519";
  std::string pubkey;  // b64url signing pubkey
  nlohmann::json payload;
  std::string signature;  // b64url, over the canonical unsigned form

  nlohmann::json to_json() const;
  static Transaction from_json(const nlohmann::json& j);
  Bytes signing_bytes() const;
  Bytes hash() const;
};

Transaction make_tx(const Account& signer, const std::string& type, nlohmann::json payload);

struct Block {
  uint64_t index = 0;
  Bytes prev_hash;  // 32 bytes; genesis links to 32 zero bytes
  int64_t timestamp = 0;
  std::vector<Transaction> transactions;
  Bytes block_hash;

  nlohmann::json to_json() const;
  static Block from_json(const nlohmann::json& j);
  Bytes compute_hash() const;
};

struct MessageRecord {
  std::string locator;
  std::string sender;
  std::vector<std::string> slice_ids;  // hex
};

struct Certification {
  std::optional<std::string> finalized_locator;
  std::string pending_locator;
  std::set<std::string> approvals;  // certifier addresses for the pending round
};

struct ContractState {
  std::map<std::string, MessageRecord> messages;          // message_id hex
  std::map<std::string, Certification> certifications;    // reader address
  std::map<std::string, std::string> enc_pubkeys;         // address -> b64 x25519
  std::map<std::string, std::string> sign_pubkeys;        // address -> b64 ed25519
  // (authority_id, reader address) -> CAS locators, in posting order
  std::map<std::string, std::map<std::string, std::vector<std::string>>> key_postings;
};

struct Receipt {
  uint64_t block_index = 0;
  Bytes tx_hash;
};

// Minimal read/submit surface; the authority service depends only on this so
// it can run against the in-process chain or a file-backed one.
class LedgerView {
 public:
  virtual ~LedgerView() = default;
  virtual Receipt submit(const Transaction& tx) = 0;
  virtual std::optional<std::string> query_attributes(const std::string& reader) const = 0;
  virtual std::optional<std::string> sign_pubkey_of(const std::string& address) const = 0;
  virtual std::optional<std::string> enc_pubkey_of(const std::string& address) const = 0;
  virtual std::vector<std::string> key_postings_for(const std::string& authority_id,
                                                    const std::string& reader) const = 0;
};

class Ledger : public LedgerView {
 public:
  struct Config {
    std::vector<std::string> certifiers;  // addresses
    int64_t genesis_time = 1700000000;    // deterministic timestamps: genesis_time + index
  };

  explicit Ledger(Config cfg);

  Receipt submit(const Transaction& tx) override;
  Receipt certify(const Account& certifier, const std::string& reader_address,
                  const std::string& metadata_locator);

  std::optional<std::string> query_attributes(const std::string& reader) const override;
  std::optional<std::string> sign_pubkey_of(const std::string& address) const override;
  std::optional<std::string> enc_pubkey_of(const std::string& address) const override;
  std::vector<std::string> key_postings_for(const std::string& authority_id,
                                            const std::string& reader) const override;

  bool verify_chain() const;
  const ContractState& state() const { return state_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  size_t quorum() const;

  Bytes serialize_chain() const;  // newline-delimited canonical JSON blocks
  // Rebuilds state by replay; throws on any invalid block or transaction.
  static std::unique_ptr<Ledger> replay(const Bytes& chain_ndjson, Config cfg);
  // Tamper-check of a serialized chain: parses, re-hashes, re-verifies every
  // signature. Any fault (including parse errors) yields false.
  static bool verify_chain_bytes(const Bytes& chain_ndjson);

 private:
  void apply(const Transaction& tx);  // state transition rules; throws
  void append_block(const Transaction& tx);

  Config cfg_;
  std::vector<Block> blocks_;
  ContractState state_;
  mutable std::mutex writer_mu_;
};

}  // namespace martsia::ledger
