#include "martsia/ledger.hpp"

#include <sodium.h>

#include <sstream>

#include "martsia/errors.hpp"

namespace martsia::ledger {

using nlohmann::json;

std::string address_of(const Bytes& sign_pk) {
  Bytes h = sha256(sign_pk);
  h.resize(20);
  return hex_encode(h);
}

Account Account::from_seed(const Bytes& seed) {
  Account a;
  Bytes sign_seed = hkdf_sha256(seed, {}, to_bytes("martsia/account/sign"), crypto_sign_SEEDBYTES);
  a.sign_pk.resize(crypto_sign_PUBLICKEYBYTES);
  a.sign_sk.resize(crypto_sign_SECRETKEYBYTES);
  crypto_sign_seed_keypair(a.sign_pk.data(), a.sign_sk.data(), sign_seed.data());
  Bytes box_seed = hkdf_sha256(seed, {}, to_bytes("martsia/account/box"), crypto_box_SEEDBYTES);
  a.box_pk.resize(crypto_box_PUBLICKEYBYTES);
  a.box_sk.resize(crypto_box_SECRETKEYBYTES);
  crypto_box_seed_keypair(a.box_pk.data(), a.box_sk.data(), box_seed.data());
  a.address = address_of(a.sign_pk);
  return a;
}

json Transaction::to_json() const {
  return json{{"payload", payload}, {"pubkey", pubkey},       {"scheme", scheme},
              {"sender", sender},   {"signature", signature}, {"type", type}};
}

Transaction Transaction::from_json(const json& j) {
  Transaction tx;
  tx.type = j.at("type").get<std::string>();
  tx.sender = j.at("sender").get<std::string>();
  tx.scheme = j.at("scheme").get<std::string>();
  tx.pubkey = j.at("pubkey").get<std::string>();
  tx.payload = j.at("payload");
  tx.signature = j.at("signature").get<std::string>();
  return tx;
}

Bytes Transaction::signing_bytes() const {
  json unsigned_form{{"payload", payload},
                     {"pubkey", pubkey},
                     {"scheme", scheme},
                     {"sender", sender},
                     {"type", type}};
  return to_bytes("martsia/tx/v1" + unsigned_form.dump());
}

Bytes Transaction::hash() const { return sha256(to_bytes(to_json().dump())); }

Transaction make_tx(const Account& signer, const std::string& type, json payload) {
  Transaction tx;
  tx.type = type;
  tx.sender = signer.address;
  tx.pubkey = b64url_encode(signer.sign_pk);
  tx.payload = std::move(payload);
  Bytes msg = tx.signing_bytes();
  Bytes sig(crypto_sign_BYTES);
  crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(), signer.sign_sk.data());
  tx.signature = b64url_encode(sig);
  return tx;
}

json Block::to_json() const {
  json txs = json::array();
  for (const auto& tx : transactions) txs.push_back(tx.to_json());
  return json{{"block_hash", hex_encode(block_hash)},
              {"index", index},
              {"prev_hash", hex_encode(prev_hash)},
              {"timestamp", timestamp},
              {"transactions", txs}};
}

Block Block::from_json(const json& j) {
  Block b;
  b.index = j.at("index").get<uint64_t>();
  b.prev_hash = hex_decode(j.at("prev_hash").get<std::string>());
  b.timestamp = j.at("timestamp").get<int64_t>();
  for (const auto& t : j.at("transactions")) b.transactions.push_back(Transaction::from_json(t));
  b.block_hash = hex_decode(j.at("block_hash").get<std::string>());
  return b;
}

Bytes Block::compute_hash() const {
  json txs = json::array();
  for (const auto& tx : transactions) txs.push_back(tx.to_json());
  json unsigned_form{{"index", index},
                     {"prev_hash", hex_encode(prev_hash)},
                     {"timestamp", timestamp},
                     {"transactions", txs}};
  return sha256(to_bytes("martsia/block/v1" + unsigned_form.dump()));
}

namespace {

bool tx_signature_valid(const Transaction& tx) {
  if (tx.scheme != "ed25519") return false;
  Bytes pk, sig;
  try {
    pk = b64url_decode(tx.pubkey);
    sig = b64url_decode(tx.signature);
  } catch (const std::exception&) {
    return false;
  }
  if (pk.size() != crypto_sign_PUBLICKEYBYTES || sig.size() != crypto_sign_BYTES) return false;
  if (address_of(pk) != tx.sender) return false;
  Bytes msg = tx.signing_bytes();
  return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(), pk.data()) == 0;
}

const std::set<std::string>& known_tx_types() {
  static const std::set<std::string> types{"RecordMessage", "Certify", "RegisterPubKey",
                                           "PostKeyMaterial"};
  return types;
}

}  // namespace

Ledger::Ledger(Config cfg) : cfg_(std::move(cfg)) {}

size_t Ledger::quorum() const {
  size_t n = cfg_.certifiers.size();
  return (n + 2) / 2;  // ceil((n+1)/2)
}

void Ledger::apply(const Transaction& tx) {
  const json& p = tx.payload;
  if (tx.type == "RecordMessage") {
    std::string id = p.at("message_id").get<std::string>();
    if (state_.messages.count(id)) throw InvalidTransition("duplicate message_id " + id);
    MessageRecord rec;
    rec.locator = p.at("locator").get<std::string>();
    rec.sender = tx.sender;
    rec.slice_ids = p.at("slice_ids").get<std::vector<std::string>>();
    state_.messages.emplace(std::move(id), std::move(rec));
  } else if (tx.type == "Certify") {
    bool is_certifier = false;
    for (const auto& c : cfg_.certifiers) is_certifier |= (c == tx.sender);
    if (!is_certifier) throw NotACertifier("account " + tx.sender + " is not a certifier");
    std::string reader = p.at("reader").get<std::string>();
    std::string locator = p.at("metadata_locator").get<std::string>();
    Certification& cert = state_.certifications[reader];
    if (cert.pending_locator != locator) {
      cert.pending_locator = locator;
      cert.approvals.clear();
    }
    cert.approvals.insert(tx.sender);
    if (cert.approvals.size() >= quorum()) cert.finalized_locator = locator;
  } else if (tx.type == "RegisterPubKey") {
    state_.enc_pubkeys[tx.sender] = p.at("enc_pubkey").get<std::string>();
  } else if (tx.type == "PostKeyMaterial") {
    state_.key_postings[p.at("authority_id").get<std::string>()]
                       [p.at("reader").get<std::string>()]
        .push_back(p.at("locator").get<std::string>());
  } else {
    throw InvalidTransition("unknown transaction type " + tx.type);
  }
  state_.sign_pubkeys[tx.sender] = tx.pubkey;
}

void Ledger::append_block(const Transaction& tx) {
  Block b;
  b.index = blocks_.size();
  b.prev_hash = blocks_.empty() ? Bytes(32, 0) : blocks_.back().block_hash;
  b.timestamp = cfg_.genesis_time + static_cast<int64_t>(b.index);
  b.transactions.push_back(tx);
  b.block_hash = b.compute_hash();
  blocks_.push_back(std::move(b));
}

Receipt Ledger::submit(const Transaction& tx) {
  std::lock_guard lock(writer_mu_);
  if (!known_tx_types().count(tx.type))
    throw InvalidTransition("unknown transaction type " + tx.type);
  if (!tx_signature_valid(tx)) throw BadSignature("transaction signature invalid");
  ContractState backup = state_;
  try {
    apply(tx);
  } catch (...) {
    state_ = std::move(backup);
    throw;
  }
  append_block(tx);
  return Receipt{blocks_.back().index, tx.hash()};
}

Receipt Ledger::certify(const Account& certifier, const std::string& reader_address,
                        const std::string& metadata_locator) {
  return submit(make_tx(certifier, "Certify",
                        json{{"reader", reader_address}, {"metadata_locator", metadata_locator}}));
}

std::optional<std::string> Ledger::query_attributes(const std::string& reader) const {
  auto it = state_.certifications.find(reader);
  if (it == state_.certifications.end()) return std::nullopt;
  return it->second.finalized_locator;
}

std::optional<std::string> Ledger::sign_pubkey_of(const std::string& address) const {
  auto it = state_.sign_pubkeys.find(address);
  if (it == state_.sign_pubkeys.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> Ledger::enc_pubkey_of(const std::string& address) const {
  auto it = state_.enc_pubkeys.find(address);
  if (it == state_.enc_pubkeys.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Ledger::key_postings_for(const std::string& authority_id,
                                                  const std::string& reader) const {
  auto a = state_.key_postings.find(authority_id);
  if (a == state_.key_postings.end()) return {};
  auto r = a->second.find(reader);
  if (r == a->second.end()) return {};
  return r->second;
}

bool Ledger::verify_chain() const { return verify_chain_bytes(serialize_chain()); }

Bytes Ledger::serialize_chain() const {
  std::string out;
  for (const auto& b : blocks_) {
    out += b.to_json().dump();
    out += '\n';
  }
  return to_bytes(out);
}

bool Ledger::verify_chain_bytes(const Bytes& chain_ndjson) {
  try {
    std::istringstream in(to_string(chain_ndjson));
    std::string line;
    uint64_t expect_index = 0;
    Bytes prev(32, 0);
    while (std::getline(in, line)) {
      if (line.empty()) return false;
      Block b = Block::from_json(json::parse(line));
      if (b.index != expect_index) return false;
      if (b.prev_hash != prev) return false;
      if (b.compute_hash() != b.block_hash) return false;
      for (const auto& tx : b.transactions) {
        if (!known_tx_types().count(tx.type)) return false;
        if (!tx_signature_valid(tx)) return false;
      }
      prev = b.block_hash;
      ++expect_index;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

std::unique_ptr<Ledger> Ledger::replay(const Bytes& chain_ndjson, Config cfg) {
  if (!verify_chain_bytes(chain_ndjson)) throw Error("chain verification failed");
  auto led = std::make_unique<Ledger>(std::move(cfg));
  std::istringstream in(to_string(chain_ndjson));
  std::string line;
  while (std::getline(in, line)) {
    Block b = Block::from_json(json::parse(line));
    for (const auto& tx : b.transactions) led->apply(tx);
    led->blocks_.push_back(std::move(b));
  }
  return led;
}

}  // namespace martsia::ledger
