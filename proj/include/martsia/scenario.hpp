#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "martsia/authority.hpp"
#include "martsia/envelope.hpp"

namespace martsia::scenario {

struct ActorSpec {
  std::string name;
  std::vector<std::string> attributes;
};

struct SliceDef {
  std::string policy;
  std::string data;
};

// Declarative multi-actor configuration: authority universe, certifier set,
// actor attribute assignments, instance id and document slices. All key
// material is derived from the master seed, so a config fully determines
// every identifier and artifact.
struct ScenarioConfig {
  std::string curve_id = "a1536";
  std::string seed = "martsia-demo";
  std::string instance_id = "43175279";
  std::vector<std::string> authorities{"A", "B", "C", "D"};
  std::vector<std::string> certifiers{"certifier1"};
  std::vector<ActorSpec> actors;
  std::string owner;  // actor name acting as Data Owner
  std::vector<SliceDef> slices;
  // actor -> per-slice expectation (true = allow); drives the demo verdict
  std::map<std::string, std::vector<bool>> expected_access;
  uint16_t base_port = 5055;

  nlohmann::json to_json() const;
  static ScenarioConfig from_json(const nlohmann::json& j);

  // The export-document scenario: five actors, four authorities, four
  // slices with distinct recipient sets.
  static ScenarioConfig export_document();

  Bytes account_seed(const std::string& name) const;
  // Bare attribute universe: all actor attributes plus the instance id.
  std::vector<std::string> attribute_universe() const;
};

enum class Access { Deny = 0, Allow = 1, Fault = 2 };

struct DemoResult {
  std::map<std::string, std::vector<Access>> matrix;  // actor -> slice verdicts
  bool matches_expected = false;
  bool channel_equivalent = false;
  std::string message_id_hex;
  std::vector<std::string> slice_ids_hex;
  std::string envelope_locator;
  Bytes report_json;
  std::string report_text;
  Bytes envelope_bytes;
  Bytes chain_bytes;
};

struct DemoOptions {
  // ports: 0 = ephemeral (default); otherwise base_port + index
  bool fixed_ports = false;
  std::optional<std::filesystem::path> out_dir;
};

// Runs the complete scenario in-process: ledger + CAS + one authority
// service per configured authority, certification, sealing, and one read
// attempt per (actor, slice) over both key channels.
DemoResult run_demo(const ScenarioConfig& cfg, const DemoOptions& opts = {});

// File-backed ledger view for multi-process CLI use: reloads the chain for
// every read and rewrites it after submit.
class FileLedger : public ledger::LedgerView {
 public:
  FileLedger(std::filesystem::path chain_path, ledger::Ledger::Config cfg);

  ledger::Receipt submit(const ledger::Transaction& tx) override;
  std::optional<std::string> query_attributes(const std::string& reader) const override;
  std::optional<std::string> sign_pubkey_of(const std::string& address) const override;
  std::optional<std::string> enc_pubkey_of(const std::string& address) const override;
  std::vector<std::string> key_postings_for(const std::string& authority_id,
                                            const std::string& reader) const override;
  std::unique_ptr<ledger::Ledger> load() const;

 private:
  std::filesystem::path path_;
  ledger::Ledger::Config cfg_;
};

}  // namespace martsia::scenario
