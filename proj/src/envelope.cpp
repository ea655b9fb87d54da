#include "martsia/envelope.hpp"

#include <sodium.h>

#include <nlohmann/json.hpp>

#include "martsia/errors.hpp"

namespace martsia::envelope {

using nlohmann::json;

namespace {

Bytes slice_id_for(const Bytes& salt, uint32_t index) {
  return sha256_cat({to_bytes("martsia/sliceid/v1"), salt, be64(index)});
}

Bytes nonce_for(const Bytes& salt, uint32_t index) {
  Bytes h = sha256_cat({to_bytes("martsia/nonce/v1"), salt, be64(index)});
  h.resize(crypto_aead_chacha20poly1305_ietf_NPUBBYTES);
  return h;
}

Bytes associated_data(const SealedSlice& s) {
  Bytes ad = s.slice_id;
  Bytes pt = to_bytes(s.policy_text);
  ad.insert(ad.end(), pt.begin(), pt.end());
  return ad;
}

json capsule_to_json(const maabe::GlobalParams& gp, const maabe::AbeCiphertext& ct) {
  const auto& G = gp.group();
  json rows = json::array();
  for (const auto& row : ct.matrix.rows) {
    json r = json::array();
    for (const auto& v : row) r.push_back(v.get_str());
    rows.push_back(std::move(r));
  }
  json c1 = json::array(), c2 = json::array(), c3 = json::array();
  for (size_t x = 0; x < ct.c1.size(); ++x) {
    c1.push_back(b64url_encode(G.gt_bytes(ct.c1[x])));
    c2.push_back(b64url_encode(G.point_bytes(ct.c2[x])));
    c3.push_back(b64url_encode(G.point_bytes(ct.c3[x])));
  }
  return json{{"c1", c1},           {"c2", c2},
              {"c3", c3},           {"rho", ct.matrix.rho},
              {"rows", rows},       {"width", ct.matrix.width},
              {"p", ct.matrix.p.get_str()}};
}

maabe::AbeCiphertext capsule_from_json(const maabe::GlobalParams& gp, const json& j) {
  const auto& G = gp.group();
  maabe::AbeCiphertext ct;
  ct.matrix.p = pairing::Int(j.at("p").get<std::string>());
  ct.matrix.width = j.at("width").get<size_t>();
  ct.matrix.rho = j.at("rho").get<std::vector<std::string>>();
  for (const auto& r : j.at("rows")) {
    std::vector<pairing::Int> row;
    for (const auto& v : r) row.emplace_back(v.get<std::string>());
    if (row.size() != ct.matrix.width)
      throw MalformedEnvelope("capsule matrix row width mismatch");
    ct.matrix.rows.push_back(std::move(row));
  }
  if (ct.matrix.rows.size() != ct.matrix.rho.size())
    throw MalformedEnvelope("capsule rho/rows length mismatch");
  for (const auto& v : j.at("c1")) ct.c1.push_back(G.gt_from_bytes(b64url_decode(v.get<std::string>())));
  for (const auto& v : j.at("c2")) ct.c2.push_back(G.point_from_bytes(b64url_decode(v.get<std::string>())));
  for (const auto& v : j.at("c3")) ct.c3.push_back(G.point_from_bytes(b64url_decode(v.get<std::string>())));
  if (ct.c1.size() != ct.matrix.rows.size() || ct.c2.size() != ct.c1.size() ||
      ct.c3.size() != ct.c1.size())
    throw MalformedEnvelope("capsule component count mismatch");
  return ct;
}

json slice_to_json(const maabe::GlobalParams& gp, const SealedSlice& s) {
  return json{{"abe", capsule_to_json(gp, s.capsule)},
              {"aead_ct", b64url_encode(s.aead_ciphertext)},
              {"nonce", b64url_encode(s.aead_nonce)},
              {"policy", s.policy_text},
              {"slice_id", b64url_encode(s.slice_id)}};
}

}  // namespace

MessageEnvelope seal_message(const std::vector<SliceSpec>& slices, const std::string& instance_id,
                             const std::vector<std::string>& universe,
                             const maabe::PublicIndex& publics, const maabe::GlobalParams& gp,
                             const std::string& sender, Rng& rng) {
  if (slices.empty()) throw Error("seal_message: at least one slice required");
  for (size_t i = 0; i < slices.size(); ++i)
    if (slices[i].index != i + 1)
      throw Error("seal_message: slice indices must be contiguous from 1");

  MessageEnvelope env;
  env.version = kEnvelopeVersion;
  env.sender = sender;
  env.salt = rng.bytes(32);

  for (const auto& spec : slices) {
    try {
      auto ast = policy::parse_policy(spec.policy_text);
      ast = policy::inject_instance_clause(ast, instance_id,
                                           static_cast<uint32_t>(universe.size()));
      auto formula = policy::expand_policy(ast, universe);
      auto matrix = lsss::compile_lsss(formula, gp.group().order());
      auto enc = maabe::encrypt(gp, publics, matrix, rng);

      SealedSlice s;
      s.slice_id = slice_id_for(env.salt, spec.index);
      s.policy_text = policy::pretty_print(ast);
      s.capsule = std::move(enc.ct);
      s.aead_nonce = nonce_for(env.salt, spec.index);
      Bytes ad = associated_data(s);
      s.aead_ciphertext.resize(spec.plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
      unsigned long long clen = 0;
      crypto_aead_chacha20poly1305_ietf_encrypt(
          s.aead_ciphertext.data(), &clen, spec.plaintext.data(), spec.plaintext.size(),
          ad.data(), ad.size(), nullptr, s.aead_nonce.data(), enc.dek.data());
      s.aead_ciphertext.resize(clen);
      env.slices.push_back(std::move(s));
    } catch (const Error& e) {
      throw Error("slice " + std::to_string(spec.index) + ": " + e.what());
    }
  }

  Bytes header = to_bytes("martsia/msgid/v1" + sender);
  for (const auto& s : env.slices) {
    Bytes ch = sha256(to_bytes(slice_to_json(gp, s).dump()));
    header.insert(header.end(), ch.begin(), ch.end());
  }
  env.message_id = sha256(header);
  return env;
}

std::optional<Bytes> open_slice(const maabe::GlobalParams& gp, const MessageEnvelope& env,
                                const Bytes& slice_id, const Bytes& gid,
                                const std::vector<maabe::UserKeyComponent>& components) {
  const SealedSlice* slice = nullptr;
  for (const auto& s : env.slices)
    if (s.slice_id == slice_id) slice = &s;
  if (!slice) throw UnknownSliceId("no slice with id " + hex_encode(slice_id));

  auto dek = maabe::decrypt(gp, gid, components, slice->capsule);
  if (!dek) return std::nullopt;

  Bytes ad = associated_data(*slice);
  if (slice->aead_ciphertext.size() < crypto_aead_chacha20poly1305_ietf_ABYTES)
    throw IntegrityError("ciphertext shorter than AEAD tag");
  Bytes pt(slice->aead_ciphertext.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
  unsigned long long plen = 0;
  if (crypto_aead_chacha20poly1305_ietf_decrypt(
          pt.data(), &plen, nullptr, slice->aead_ciphertext.data(),
          slice->aead_ciphertext.size(), ad.data(), ad.size(), slice->aead_nonce.data(),
          dek->data()) != 0)
    throw IntegrityError("AEAD authentication failed");
  pt.resize(plen);
  return pt;
}

Bytes serialize(const maabe::GlobalParams& gp, const MessageEnvelope& env) {
  json slices = json::array();
  for (const auto& s : env.slices) slices.push_back(slice_to_json(gp, s));
  json j{{"curve", gp.curve_id},
         {"message_id", b64url_encode(env.message_id)},
         {"salt", b64url_encode(env.salt)},
         {"sender", env.sender},
         {"slices", slices},
         {"version", env.version}};
  return to_bytes(j.dump());
}

MessageEnvelope deserialize(const maabe::GlobalParams& gp, const Bytes& bytes) {
  json j;
  try {
    j = json::parse(to_string(bytes));
  } catch (const json::exception& e) {
    throw MalformedEnvelope(std::string("envelope: ") + e.what());
  }
  try {
    MessageEnvelope env;
    env.version = j.at("version").get<std::string>();
    if (env.version != kEnvelopeVersion)
      throw MalformedEnvelope("version: unknown value " + env.version);
    if (j.at("curve").get<std::string>() != gp.curve_id)
      throw MalformedEnvelope("curve: parameter set mismatch");
    env.message_id = b64url_decode(j.at("message_id").get<std::string>());
    env.salt = b64url_decode(j.at("salt").get<std::string>());
    env.sender = j.at("sender").get<std::string>();
    if (j.at("slices").empty()) throw MalformedEnvelope("slices: empty");
    for (const auto& sj : j.at("slices")) {
      SealedSlice s;
      s.slice_id = b64url_decode(sj.at("slice_id").get<std::string>());
      s.policy_text = sj.at("policy").get<std::string>();
      s.capsule = capsule_from_json(gp, sj.at("abe"));
      s.aead_nonce = b64url_decode(sj.at("nonce").get<std::string>());
      s.aead_ciphertext = b64url_decode(sj.at("aead_ct").get<std::string>());
      env.slices.push_back(std::move(s));
    }
    return env;
  } catch (const json::exception& e) {
    throw MalformedEnvelope(std::string("envelope: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw MalformedEnvelope(std::string("envelope: ") + e.what());
  }
}

}  // namespace martsia::envelope
