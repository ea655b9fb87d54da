// martsia: command-line workflows for certifiers, data owners, readers and
// attribute authorities, plus a self-contained multi-actor demo.
//
// Workspace layout under $MARTSIA_HOME (default ./martsia-home):
//   config.json    scenario configuration (created on first use)
//   chain.ndjson   block chain, one canonical-JSON block per line
//   objects/       content-addressed store
//   publics/<authority>.json   published attribute publics

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <regex>

#include "martsia/scenario.hpp"

using namespace martsia;
using nlohmann::json;

namespace {

// exit-code contract: 0 ok, 2 authorization, 3 ledger rejection,
// 4 access denied by policy, 5 integrity, 6 network, 64 usage
constexpr int kExitAuthz = 2;
constexpr int kExitLedger = 3;
constexpr int kExitDenied = 4;
constexpr int kExitIntegrity = 5;
constexpr int kExitNetwork = 6;
constexpr int kExitUsage = 64;

std::filesystem::path home_dir() {
  if (const char* env = std::getenv("MARTSIA_HOME")) return env;
  return "martsia-home";
}

Bytes slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& p, const Bytes& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + p.string());
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

struct Workspace {
  std::filesystem::path home;
  scenario::ScenarioConfig cfg;
  maabe::GlobalParams gp;
  std::unique_ptr<cas::DirStore> store;
  std::unique_ptr<scenario::FileLedger> chain;

  ledger::Account account(const std::string& name) const {
    return ledger::Account::from_seed(cfg.account_seed(name));
  }

  // accepts an actor/certifier name or a literal 40-hex address
  std::string resolve_address(const std::string& who) const {
    static const std::regex addr_re("[0-9a-f]{40}");
    if (std::regex_match(who, addr_re)) return who;
    return account(who).address;
  }

  size_t authority_index(const std::string& id) const {
    for (size_t i = 0; i < cfg.authorities.size(); ++i)
      if (cfg.authorities[i] == id) return i;
    throw UnknownAuthority("authority " + id + " is not in the configured universe");
  }

  uint16_t authority_port(const std::string& id) const {
    return static_cast<uint16_t>(cfg.base_port + authority_index(id));
  }

  // Authority key material is derived from the workspace seed, so every
  // process reconstructs the same secrets without a key file. Each instance
  // extends over the sorted attribute universe up front: the draw order is
  // then identical everywhere and on-demand extension never diverges.
  std::unique_ptr<authority::AuthorityService> make_authority(const std::string& id,
                                                             uint16_t port = 0) {
    authority::ServiceConfig scfg;
    scfg.authority_id = id;
    scfg.port = port ? port : authority_port(id);
    auto svc = std::make_unique<authority::AuthorityService>(
        scfg, gp, *chain, *store, account("authority/" + id),
        Rng(to_bytes(cfg.seed + "/authority/" + id)));
    auto publics = svc->publish_for(cfg.attribute_universe());
    std::filesystem::create_directories(home / "publics");
    spit(publics_path(id), to_bytes(maabe::publics_to_json(gp, publics)));
    return svc;
  }

  std::filesystem::path publics_path(const std::string& id) const {
    return home / "publics" / (id + ".json");
  }

  maabe::PublicIndex publish_authority(const std::string& id) {
    make_authority(id);
    return maabe::publics_from_json(gp, to_string(slurp(publics_path(id))));
  }

  maabe::PublicIndex load_all_publics() {
    maabe::PublicIndex all;
    for (const auto& id : cfg.authorities) {
      auto p = publics_path(id);
      auto pubs = std::filesystem::exists(p)
                      ? maabe::publics_from_json(gp, to_string(slurp(p)))
                      : publish_authority(id);
      all.insert(pubs.begin(), pubs.end());
    }
    return all;
  }
};

Workspace open_workspace(const std::string& seed_override) {
  Workspace ws;
  ws.home = home_dir();
  std::filesystem::create_directories(ws.home);
  auto cfg_path = ws.home / "config.json";
  if (std::filesystem::exists(cfg_path)) {
    ws.cfg = scenario::ScenarioConfig::from_json(json::parse(to_string(slurp(cfg_path))));
  } else {
    ws.cfg = scenario::ScenarioConfig::export_document();
    spit(cfg_path, to_bytes(ws.cfg.to_json().dump()));
  }
  if (!seed_override.empty()) ws.cfg.seed = seed_override;
  ws.gp = maabe::global_setup(to_bytes(ws.cfg.seed + "/gp"), ws.cfg.curve_id);
  ws.store = std::make_unique<cas::DirStore>(ws.home / "cas");
  ledger::Ledger::Config lcfg;
  for (const auto& c : ws.cfg.certifiers) lcfg.certifiers.push_back(ws.account(c).address);
  ws.chain = std::make_unique<scenario::FileLedger>(ws.home / "chain.ndjson", lcfg);
  return ws;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  while (start <= s.size()) {
    size_t comma = s.find(',', start);
    std::string item = s.substr(start, comma == std::string::npos ? comma : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }

int cmd_certify(Workspace& ws, const std::string& as, const std::string& reader,
                const std::string& attrs_csv, const std::string& instance) {
  static const std::regex name_re("[A-Za-z0-9_]+");
  auto attrs = split_csv(attrs_csv);
  if (attrs.empty() || instance.empty()) {
    std::cerr << "certify: --attrs and --instance must be non-empty\n";
    return kExitUsage;
  }
  for (const auto& a : attrs)
    if (!std::regex_match(a, name_re)) {
      std::cerr << "certify: bad attribute name '" << a << "'\n";
      return kExitUsage;
    }
  if (!std::regex_match(instance, std::regex("[0-9]+"))) {
    std::cerr << "certify: instance id must be numeric\n";
    return kExitUsage;
  }

  authority::ReaderMetadata meta;
  meta.address = ws.resolve_address(reader);
  meta.instance_ids = {instance};
  meta.attributes = attrs;
  for (const auto& c : ws.cfg.certifiers) meta.certifiers.push_back(ws.account(c).address);
  cas::Locator loc = ws.store->put(meta.serialize());
  ws.chain->submit(ledger::make_tx(ws.account(as), "Certify",
                                   json{{"reader", meta.address}, {"metadata_locator", loc.text}}));
  auto finalized = ws.chain->query_attributes(meta.address);
  bool done = finalized && *finalized == loc.text;
  std::cout << "metadata " << loc.text << "\n"
            << "reader " << meta.address << (done ? " finalized" : " pending quorum") << "\n";
  return 0;
}

int cmd_send(Workspace& ws, const std::string& as, const std::string& doc_path,
             const std::string& policies_path, const std::string& instance) {
  auto policies = policy::parse_policy_file(to_string(slurp(policies_path)));
  if (policies.empty()) {
    std::cerr << "send: policy file contains no policies\n";
    return kExitUsage;
  }
  // document slices are separated by lines consisting of "---"
  std::vector<std::string> parts{""};
  std::istringstream doc(to_string(slurp(doc_path)));
  std::string line;
  while (std::getline(doc, line)) {
    if (line == "---")
      parts.emplace_back();
    else
      parts.back() += (parts.back().empty() ? "" : "\n") + line;
  }
  if (parts.size() != policies.size()) {
    std::cerr << "send: " << parts.size() << " document slices but " << policies.size()
              << " policies\n";
    return kExitUsage;
  }

  std::vector<envelope::SliceSpec> specs;
  for (size_t i = 0; i < parts.size(); ++i)
    specs.push_back(envelope::SliceSpec{static_cast<uint32_t>(i + 1), to_bytes(parts[i]),
                                        policy::pretty_print(policies[i])});
  auto publics = ws.load_all_publics();
  auto sender = ws.account(as);
  Rng rng(to_bytes(ws.cfg.seed + "/seal"));
  auto env = envelope::seal_message(specs, instance, ws.cfg.authorities, publics, ws.gp,
                                    sender.address, rng);
  Bytes bytes = envelope::serialize(ws.gp, env);
  cas::Locator loc = ws.store->put(bytes);
  json slice_ids = json::array();
  for (const auto& s : env.slices) slice_ids.push_back(hex_encode(s.slice_id));
  ws.chain->submit(ledger::make_tx(sender, "RecordMessage",
                                   json{{"locator", loc.text},
                                        {"message_id", hex_encode(env.message_id)},
                                        {"slice_ids", slice_ids}}));
  std::cout << "message_id " << hex_encode(env.message_id) << "\n";
  for (size_t i = 0; i < env.slices.size(); ++i)
    std::cout << "slice" << (i + 1) << " " << hex_encode(env.slices[i].slice_id) << "\n";
  std::cout << "envelope " << loc.text << "\n";
  return 0;
}

int cmd_register(Workspace& ws, const std::string& as) {
  auto acc = ws.account(as);
  ws.chain->submit(ledger::make_tx(acc, "RegisterPubKey",
                                   json{{"enc_pubkey", b64url_encode(acc.box_pk)}}));
  std::cout << "registered " << acc.address << "\n";
  return 0;
}

int cmd_read(Workspace& ws, const std::string& as, const std::string& message_id, uint32_t slice_n,
             bool via_ledger) {
  auto led = ws.chain->load();
  auto it = led->state().messages.find(message_id);
  if (it == led->state().messages.end()) throw NotFound("no message " + message_id + " on ledger");
  auto env = envelope::deserialize(ws.gp, ws.store->get(cas::Locator{it->second.locator}));
  if (slice_n < 1 || slice_n > env.slices.size()) {
    std::cerr << "read: slice index out of range (1.." << env.slices.size() << ")\n";
    return kExitUsage;
  }

  auto reader = ws.account(as);
  std::vector<std::vector<maabe::UserKeyComponent>> responses;
  for (const auto& id : ws.cfg.authorities) {
    if (via_ledger)
      responses.push_back(
          authority::collect_via_ledger(ws.gp, *ws.chain, *ws.store, reader, id));
    else
      responses.push_back(authority::request_keys_direct(ws.gp, "127.0.0.1",
                                                         ws.authority_port(id), reader, id));
  }
  auto ring = authority::assemble_keys(responses, to_bytes(reader.address));
  auto plain = envelope::open_slice(ws.gp, env, env.slices[slice_n - 1].slice_id,
                                    to_bytes(reader.address), ring);
  if (!plain) {
    std::cerr << "access denied: keyring does not satisfy the slice policy\n";
    return kExitDenied;
  }
  std::cout.write(reinterpret_cast<const char*>(plain->data()),
                  static_cast<std::streamsize>(plain->size()));
  return 0;
}

int cmd_serve(Workspace& ws, const std::string& id, uint16_t port) {
  auto svc = ws.make_authority(id, port);
  svc->start();
  std::cout << "authority " << id << " listening on 127.0.0.1:" << svc->port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  svc->stop();
  return 0;
}

int cmd_deliver(Workspace& ws, const std::string& id, const std::string& reader) {
  auto svc = ws.make_authority(id);
  auto receipt = svc->deliver_via_ledger(ws.resolve_address(reader));
  std::cout << "posted key material in block " << receipt.block_index << "\n";
  return 0;
}

int cmd_demo(const std::string& seed, const std::string& curve, const std::string& out_dir) {
  auto cfg = scenario::ScenarioConfig::export_document();
  if (!seed.empty()) cfg.seed = seed;
  if (!curve.empty()) cfg.curve_id = curve;
  scenario::DemoOptions opts;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  auto res = scenario::run_demo(cfg, opts);
  std::cout << res.report_text;
  if (!res.channel_equivalent) {
    std::cerr << "demo: direct and via-ledger key channels disagree\n";
    return 1;
  }
  return res.matches_expected ? 0 : 1;
}

int classify(const std::exception& e) {
  if (dynamic_cast<const SyntaxError*>(&e) || dynamic_cast<const InvalidInstanceId*>(&e) ||
      dynamic_cast<const UnknownAuthority*>(&e) || dynamic_cast<const ThresholdTooLarge*>(&e))
    return kExitUsage;
  if (auto* p = dynamic_cast<const ProtocolError*>(&e))
    return (p->code == "not-certified" || p->code == "bad-signature" || p->code == "expired" ||
            p->code == "unknown-address")
               ? kExitAuthz
               : kExitNetwork;
  if (dynamic_cast<const NotACertifier*>(&e) || dynamic_cast<const BadSignature*>(&e))
    return kExitAuthz;
  if (dynamic_cast<const InvalidTransition*>(&e) || dynamic_cast<const NoRegisteredKey*>(&e) ||
      dynamic_cast<const NotFound*>(&e))
    return kExitLedger;
  if (dynamic_cast<const IntegrityError*>(&e) || dynamic_cast<const IntegrityFault*>(&e) ||
      dynamic_cast<const MalformedEnvelope*>(&e))
    return kExitIntegrity;
  if (dynamic_cast<const NetworkError*>(&e)) return kExitNetwork;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decentralized confidential data exchange"};
  app.require_subcommand(1);
  std::string seed;
  app.add_option("--seed", seed, "override the workspace seed");

  std::string reader, attrs, instance, doc, policies, message_id, auth_id, curve, out_dir;
  std::string cert_as = "certifier1", send_as = "Supplier", read_as;
  uint32_t slice_n = 0;
  uint16_t port = 0;
  bool via_ledger = false;

  auto* certifier = app.add_subcommand("certifier", "certifier role");
  auto* certify = certifier->add_subcommand("certify", "certify a reader's attributes");
  certify->add_option("--reader", reader, "reader name or address")->required();
  certify->add_option("--attrs", attrs, "comma-separated attribute names")->required();
  certify->add_option("--instance", instance, "process instance id")->required();
  certify->add_option("--as", cert_as, "acting certifier");

  auto* owner = app.add_subcommand("owner", "data owner role");
  auto* send = owner->add_subcommand("send", "seal a document and record it on the ledger");
  send->add_option("--doc", doc, "document file; slices separated by '---' lines")->required();
  send->add_option("--policies", policies, "policy file, one policy per line")->required();
  send->add_option("--instance", instance, "process instance id")->required();
  send->add_option("--as", send_as, "acting owner");

  auto* rdr = app.add_subcommand("reader", "reader role");
  auto* regcmd = rdr->add_subcommand("register", "register encryption pubkey on the ledger");
  regcmd->add_option("--as", read_as, "acting reader")->required();
  auto* read = rdr->add_subcommand("read", "fetch, authorize and decrypt one slice");
  read->add_option("--message", message_id, "message id (hex)")->required();
  read->add_option("--slice", slice_n, "slice number, 1-based")->required();
  read->add_flag("--via-ledger", via_ledger, "collect keys from ledger postings");
  read->add_option("--as", read_as, "acting reader")->required();

  auto* auth = app.add_subcommand("authority", "attribute authority role");
  auto* serve = auth->add_subcommand("serve", "publish publics and serve key requests");
  serve->add_option("--id", auth_id, "authority id")->required();
  serve->add_option("--port", port, "listen port (default base_port + index)");
  auto* publish = auth->add_subcommand("publish", "write attribute publics file");
  publish->add_option("--id", auth_id, "authority id")->required();
  auto* deliver = auth->add_subcommand("deliver", "post encrypted key material on the ledger");
  deliver->add_option("--id", auth_id, "authority id")->required();
  deliver->add_option("--reader", reader, "reader name or address")->required();

  auto* demo = app.add_subcommand("demo", "scenario demo");
  auto* run = demo->add_subcommand("run", "run the full multi-actor scenario in-process");
  run->add_option("--out", out_dir, "write report + artifacts to this directory");
  run->add_option("--curve", curve, "curve id override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_demo(seed, curve, out_dir);
    Workspace ws = open_workspace(seed);
    if (certify->parsed()) return cmd_certify(ws, cert_as, reader, attrs, instance);
    if (send->parsed()) return cmd_send(ws, send_as, doc, policies, instance);
    if (regcmd->parsed()) return cmd_register(ws, read_as);
    if (read->parsed()) return cmd_read(ws, read_as, message_id, slice_n, via_ledger);
    if (serve->parsed()) return cmd_serve(ws, auth_id, port);
    if (publish->parsed()) {
      ws.publish_authority(auth_id);
      std::cout << "publics " << ws.publics_path(auth_id).string() << "\n";
      return 0;
    }
    if (deliver->parsed()) return cmd_deliver(ws, auth_id, reader);
    std::cerr << app.help();
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  }
}
