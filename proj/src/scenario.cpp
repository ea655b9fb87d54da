#include "martsia/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "martsia/errors.hpp"

namespace martsia::scenario {

using nlohmann::json;

json ScenarioConfig::to_json() const {
  json actors_j = json::object();
  for (const auto& a : actors) actors_j[a.name] = a.attributes;
  json slices_j = json::array();
  for (const auto& s : slices) slices_j.push_back(json{{"data", s.data}, {"policy", s.policy}});
  json expected_j = json::object();
  for (const auto& [name, row] : expected_access) expected_j[name] = row;
  return json{{"actors", actors_j},
              {"authorities", authorities},
              {"base_port", base_port},
              {"certifiers", certifiers},
              {"curve", curve_id},
              {"expected_access", expected_j},
              {"instance_id", instance_id},
              {"owner", owner},
              {"seed", seed},
              {"slices", slices_j}};
}

ScenarioConfig ScenarioConfig::from_json(const json& j) {
  ScenarioConfig c;
  c.curve_id = j.at("curve").get<std::string>();
  c.seed = j.at("seed").get<std::string>();
  c.instance_id = j.at("instance_id").get<std::string>();
  c.authorities = j.at("authorities").get<std::vector<std::string>>();
  c.certifiers = j.at("certifiers").get<std::vector<std::string>>();
  c.owner = j.at("owner").get<std::string>();
  c.base_port = j.at("base_port").get<uint16_t>();
  for (const auto& [name, attrs] : j.at("actors").items())
    c.actors.push_back(ActorSpec{name, attrs.get<std::vector<std::string>>()});
  for (const auto& s : j.at("slices"))
    c.slices.push_back(SliceDef{s.at("policy").get<std::string>(), s.at("data").get<std::string>()});
  if (j.contains("expected_access"))
    for (const auto& [name, row] : j.at("expected_access").items())
      c.expected_access[name] = row.get<std::vector<bool>>();
  return c;
}

ScenarioConfig ScenarioConfig::export_document() {
  ScenarioConfig c;
  c.owner = "Supplier";
  c.actors = {
      {"IntCarrier", {"Carrier", "International"}},
      {"IntCustoms", {"Customs", "International"}},
      {"Manufacturer", {"Manufacturer"}},
      {"NatCustoms", {"Customs"}},
      {"Supplier", {"Supplier", "International"}},
  };
  c.slices = {
      {"Manufacturer@A or Customs@2+ or (Carrier@2+ and International@B)",
       "order 7731: wheelchair ramp kit, 12 units, consignment AB-440"},
      {"Customs@2+", "customs valuation: EUR 18400, tariff heading 8713.90"},
      {"(Supplier@2+ and International@B) or Manufacturer@A",
       "unit price EUR 1320, payment net 30, incoterm DAP"},
      {"Manufacturer@A or Customs@2+", "certificate of origin: IT, conformity CE-2209"},
  };
  c.expected_access = {
      {"IntCarrier", {true, false, false, false}},
      {"IntCustoms", {true, true, false, true}},
      {"Manufacturer", {true, false, true, true}},
      {"NatCustoms", {true, true, false, true}},
      {"Supplier", {false, false, true, false}},
  };
  return c;
}

Bytes ScenarioConfig::account_seed(const std::string& name) const {
  return sha256(to_bytes(seed + "/account/" + name));
}

std::vector<std::string> ScenarioConfig::attribute_universe() const {
  std::set<std::string> set;
  set.insert(instance_id);
  for (const auto& a : actors) set.insert(a.attributes.begin(), a.attributes.end());
  return {set.begin(), set.end()};
}

namespace {

struct ActorRuntime {
  ledger::Account account;
  std::vector<std::string> attributes;
};

std::string access_word(Access a) {
  switch (a) {
    case Access::Allow: return "allow";
    case Access::Deny: return "deny";
    default: return "fault";
  }
}

std::string keyring_fingerprint(const maabe::GlobalParams& gp,
                                const std::vector<maabe::UserKeyComponent>& ring) {
  std::map<std::string, std::string> sorted;
  for (const auto& c : ring) sorted[c.attribute] = maabe::component_to_json(gp, c);
  std::string all;
  for (const auto& [_, v] : sorted) all += v;
  return hex_encode(sha256(to_bytes(all)));
}

}  // namespace

DemoResult run_demo(const ScenarioConfig& cfg, const DemoOptions& opts) {
  const auto& universe = cfg.authorities;
  maabe::GlobalParams gp = maabe::global_setup(to_bytes(cfg.seed + "/gp"), cfg.curve_id);

  // accounts
  std::map<std::string, ActorRuntime> actors;
  for (const auto& a : cfg.actors)
    actors[a.name] = {ledger::Account::from_seed(cfg.account_seed(a.name)), a.attributes};
  std::vector<ledger::Account> certifier_accounts;
  for (const auto& name : cfg.certifiers)
    certifier_accounts.push_back(ledger::Account::from_seed(cfg.account_seed(name)));

  ledger::Ledger::Config lcfg;
  for (const auto& acc : certifier_accounts) lcfg.certifiers.push_back(acc.address);
  ledger::Ledger chain(lcfg);
  cas::MemoryStore store;

  // authority network
  std::vector<std::unique_ptr<authority::AuthorityService>> services;
  maabe::PublicIndex publics;
  std::vector<std::string> bare_universe = cfg.attribute_universe();
  for (size_t i = 0; i < universe.size(); ++i) {
    const std::string& aid = universe[i];
    authority::ServiceConfig scfg;
    scfg.authority_id = aid;
    scfg.port = opts.fixed_ports ? static_cast<uint16_t>(cfg.base_port + i) : 0;
    auto svc = std::make_unique<authority::AuthorityService>(
        scfg, gp, chain, store, ledger::Account::from_seed(cfg.account_seed("authority/" + aid)),
        Rng(to_bytes(cfg.seed + "/authority/" + aid)));
    auto pubs = svc->publish_for(bare_universe);
    publics.insert(pubs.begin(), pubs.end());
    svc->start();
    services.push_back(std::move(svc));
  }

  // actor metadata: register encryption pubkeys, then certify
  for (const auto& [name, rt] : actors) {
    chain.submit(ledger::make_tx(rt.account, "RegisterPubKey",
                                 json{{"enc_pubkey", b64url_encode(rt.account.box_pk)}}));
    authority::ReaderMetadata meta;
    meta.address = rt.account.address;
    meta.instance_ids = {cfg.instance_id};
    meta.attributes = rt.attributes;
    for (const auto& acc : certifier_accounts) meta.certifiers.push_back(acc.address);
    cas::Locator mloc = store.put(meta.serialize());
    for (const auto& acc : certifier_accounts) chain.certify(acc, rt.account.address, mloc.text);
  }

  // owner seals and records the message
  const ActorRuntime& owner = actors.at(cfg.owner);
  std::vector<envelope::SliceSpec> specs;
  for (size_t i = 0; i < cfg.slices.size(); ++i)
    specs.push_back(envelope::SliceSpec{static_cast<uint32_t>(i + 1),
                                        to_bytes(cfg.slices[i].data), cfg.slices[i].policy});
  Rng seal_rng(to_bytes(cfg.seed + "/seal"));
  envelope::MessageEnvelope env = envelope::seal_message(
      specs, cfg.instance_id, universe, publics, gp, owner.account.address, seal_rng);
  Bytes env_bytes = envelope::serialize(gp, env);
  cas::Locator env_loc = store.put(env_bytes);
  json slice_ids = json::array();
  for (const auto& s : env.slices) slice_ids.push_back(hex_encode(s.slice_id));
  chain.submit(ledger::make_tx(owner.account, "RecordMessage",
                               json{{"locator", env_loc.text},
                                    {"message_id", hex_encode(env.message_id)},
                                    {"slice_ids", slice_ids}}));

  // every reader acquires keys over both channels and tries every slice
  DemoResult result;
  result.message_id_hex = hex_encode(env.message_id);
  for (const auto& s : env.slices) result.slice_ids_hex.push_back(hex_encode(s.slice_id));
  result.envelope_locator = env_loc.text;
  result.channel_equivalent = true;

  for (const auto& [name, rt] : actors) {
    Bytes gid = to_bytes(rt.account.address);
    std::vector<std::vector<maabe::UserKeyComponent>> direct_responses;
    for (const auto& svc : services)
      direct_responses.push_back(authority::request_keys_direct(
          gp, "127.0.0.1", svc->port(), rt.account, svc->authority_id()));
    auto direct_ring = authority::assemble_keys(direct_responses, gid);

    std::vector<std::vector<maabe::UserKeyComponent>> ledger_responses;
    for (const auto& svc : services) {
      svc->deliver_via_ledger(rt.account.address);
      ledger_responses.push_back(
          authority::collect_via_ledger(gp, chain, store, rt.account, svc->authority_id()));
    }
    auto ledger_ring = authority::assemble_keys(ledger_responses, gid);

    if (keyring_fingerprint(gp, direct_ring) != keyring_fingerprint(gp, ledger_ring))
      result.channel_equivalent = false;

    std::vector<Access> row;
    for (const auto& s : env.slices) {
      Access verdict;
      try {
        auto pt = envelope::open_slice(gp, env, s.slice_id, gid, direct_ring);
        if (pt) {
          verdict = Access::Allow;
          auto pt2 = envelope::open_slice(gp, env, s.slice_id, gid, ledger_ring);
          if (!pt2 || *pt2 != *pt) result.channel_equivalent = false;
        } else {
          verdict = Access::Deny;
          if (envelope::open_slice(gp, env, s.slice_id, gid, ledger_ring))
            result.channel_equivalent = false;
        }
      } catch (const IntegrityError&) {
        verdict = Access::Fault;
      }
      row.push_back(verdict);
    }
    result.matrix[name] = std::move(row);
  }

  for (auto& svc : services) svc->stop();

  // verdict and report
  result.matches_expected = !cfg.expected_access.empty();
  for (const auto& [name, expected] : cfg.expected_access) {
    auto it = result.matrix.find(name);
    if (it == result.matrix.end() || it->second.size() != expected.size()) {
      result.matches_expected = false;
      continue;
    }
    for (size_t i = 0; i < expected.size(); ++i)
      if ((it->second[i] == Access::Allow) != expected[i]) result.matches_expected = false;
  }

  json matrix_j = json::object();
  for (const auto& [name, row] : result.matrix) {
    json r = json::array();
    for (Access a : row) r.push_back(access_word(a));
    matrix_j[name] = r;
  }
  json expected_j = json::object();
  for (const auto& [name, row] : cfg.expected_access) {
    json r = json::array();
    for (bool b : row) r.push_back(b ? "allow" : "deny");
    expected_j[name] = r;
  }
  json report{{"channel_equivalent", result.channel_equivalent},
              {"envelope_locator", env_loc.text},
              {"expected", expected_j},
              {"matches_expected", result.matches_expected},
              {"matrix", matrix_j},
              {"message_id", result.message_id_hex},
              {"slice_ids", result.slice_ids_hex}};
  result.report_json = to_bytes(report.dump());

  std::ostringstream txt;
  txt << "access matrix for message " << result.message_id_hex << "\n";
  size_t name_w = 8;
  for (const auto& [name, _] : result.matrix) name_w = std::max(name_w, name.size());
  txt << std::string(name_w, ' ');
  for (size_t i = 1; i <= cfg.slices.size(); ++i) txt << "  slice" << i;
  txt << "\n";
  for (const auto& [name, row] : result.matrix) {
    txt << name << std::string(name_w - name.size(), ' ');
    for (Access a : row) {
      std::string w = access_word(a);
      txt << "  " << w << std::string(6 - w.size(), ' ');
    }
    txt << "\n";
  }
  txt << (result.matches_expected ? "verdict: expected matrix reproduced\n"
                                  : "verdict: MISMATCH against expected matrix\n");
  result.report_text = txt.str();
  result.envelope_bytes = env_bytes;
  result.chain_bytes = chain.serialize_chain();

  if (opts.out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(*opts.out_dir);
    auto dump = [&](const char* fname, const Bytes& data) {
      std::ofstream out(*opts.out_dir / fname, std::ios::binary | std::ios::trunc);
      out.write(reinterpret_cast<const char*>(data.data()),
                static_cast<std::streamsize>(data.size()));
    };
    dump("report.json", result.report_json);
    dump("report.txt", to_bytes(result.report_text));
    dump("envelope.menv", result.envelope_bytes);
    dump("chain.ndjson", result.chain_bytes);
  }
  return result;
}

FileLedger::FileLedger(std::filesystem::path chain_path, ledger::Ledger::Config cfg)
    : path_(std::move(chain_path)), cfg_(std::move(cfg)) {}

std::unique_ptr<ledger::Ledger> FileLedger::load() const {
  Bytes content;
  std::ifstream in(path_, std::ios::binary);
  if (in)
    content.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ledger::Ledger::replay(content, cfg_);
}

ledger::Receipt FileLedger::submit(const ledger::Transaction& tx) {
  auto led = load();
  auto receipt = led->submit(tx);
  Bytes bytes = led->serialize_chain();
  std::ofstream out(path_, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return receipt;
}

std::optional<std::string> FileLedger::query_attributes(const std::string& reader) const {
  return load()->query_attributes(reader);
}
std::optional<std::string> FileLedger::sign_pubkey_of(const std::string& address) const {
  return load()->sign_pubkey_of(address);
}
std::optional<std::string> FileLedger::enc_pubkey_of(const std::string& address) const {
  return load()->enc_pubkey_of(address);
}
std::vector<std::string> FileLedger::key_postings_for(const std::string& authority_id,
                                                      const std::string& reader) const {
  return load()->key_postings_for(authority_id, reader);
}

}  // namespace martsia::scenario
