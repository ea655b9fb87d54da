// Python surface: policy handling, LSSS compilation, the ABE envelope
// seal/open cycle, ledger verification and the scenario demo.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "martsia/scenario.hpp"

namespace py = pybind11;
using namespace martsia;
using nlohmann::json;

namespace {

Bytes from_pybytes(const py::bytes& b) {
  std::string s = b;
  return Bytes(s.begin(), s.end());
}

py::bytes to_pybytes(const Bytes& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

std::string canonical_policy(const std::string& text) {
  return policy::pretty_print(policy::parse_policy(text));
}

bool policy_satisfied(const std::string& text, const std::vector<std::string>& universe,
                      const std::set<std::string>& owned) {
  auto f = policy::expand_policy(policy::parse_policy(text), universe);
  return policy::evaluate_formula(f, owned);
}

py::dict lsss_compile(const std::string& text, const std::vector<std::string>& universe,
                      const std::string& prime_dec) {
  auto f = policy::expand_policy(policy::parse_policy(text), universe);
  auto m = lsss::compile_lsss(f, pairing::Int(prime_dec));
  py::list rows, rho;
  for (size_t i = 0; i < m.rows.size(); ++i) {
    py::list row;
    for (const auto& v : m.rows[i]) row.append(v.get_str());
    rows.append(row);
    rho.append(m.rho[i]);
  }
  py::dict out;
  out["rows"] = rows;
  out["rho"] = rho;
  out["width"] = m.width;
  return out;
}

std::optional<std::map<size_t, std::string>> lsss_reconstruct(
    const std::string& text, const std::vector<std::string>& universe,
    const std::string& prime_dec, const std::set<std::string>& owned) {
  auto f = policy::expand_policy(policy::parse_policy(text), universe);
  auto m = lsss::compile_lsss(f, pairing::Int(prime_dec));
  auto plan = lsss::reconstruction_coefficients(m, owned);
  if (!plan) return std::nullopt;
  std::map<size_t, std::string> out;
  for (const auto& [row, c] : plan->coefficients) out[row] = c.get_str();
  return out;
}

struct PyAuthority {
  maabe::AuthorityKeypair kp;

  static PyAuthority setup(const maabe::GlobalParams& gp, const std::string& id,
                           const std::vector<std::string>& attributes, const py::bytes& seed) {
    Rng rng(from_pybytes(seed));
    return PyAuthority{maabe::authority_setup(gp, id, attributes, rng)};
  }

  std::string publics_json(const maabe::GlobalParams& gp) const {
    maabe::PublicIndex idx(kp.publics.begin(), kp.publics.end());
    return maabe::publics_to_json(gp, idx);
  }

  std::string keygen(const maabe::GlobalParams& gp, const py::bytes& gid,
                     const std::string& attribute) const {
    return maabe::component_to_json(gp, maabe::keygen(gp, kp, from_pybytes(gid), attribute));
  }
};

envelope::MessageEnvelope seal(const maabe::GlobalParams& gp,
                               const std::vector<std::pair<py::bytes, std::string>>& slices,
                               const std::string& instance_id,
                               const std::vector<std::string>& universe,
                               const std::vector<std::string>& publics_jsons,
                               const std::string& sender, const py::bytes& seed) {
  maabe::PublicIndex publics;
  for (const auto& pj : publics_jsons) {
    auto p = maabe::publics_from_json(gp, pj);
    publics.insert(p.begin(), p.end());
  }
  std::vector<envelope::SliceSpec> specs;
  for (size_t i = 0; i < slices.size(); ++i)
    specs.push_back(envelope::SliceSpec{static_cast<uint32_t>(i + 1),
                                        from_pybytes(slices[i].first), slices[i].second});
  Rng rng(from_pybytes(seed));
  return envelope::seal_message(specs, instance_id, universe, publics, gp, sender, rng);
}

std::optional<py::bytes> open_slice(const maabe::GlobalParams& gp,
                                    const envelope::MessageEnvelope& env, const py::bytes& slice_id,
                                    const py::bytes& gid,
                                    const std::vector<std::string>& component_jsons) {
  std::vector<maabe::UserKeyComponent> ring;
  for (const auto& cj : component_jsons) ring.push_back(maabe::component_from_json(gp, cj));
  auto out = envelope::open_slice(gp, env, from_pybytes(slice_id), from_pybytes(gid), ring);
  if (!out) return std::nullopt;
  return to_pybytes(*out);
}

py::dict demo(const std::string& seed, const std::string& curve,
              std::optional<std::filesystem::path> out_dir) {
  auto cfg = scenario::ScenarioConfig::export_document();
  if (!seed.empty()) cfg.seed = seed;
  if (!curve.empty()) cfg.curve_id = curve;
  scenario::DemoOptions opts;
  opts.out_dir = out_dir;
  auto res = scenario::run_demo(cfg, opts);
  py::dict out;
  out["report"] = json::parse(to_string(res.report_json)).dump();
  out["matches_expected"] = res.matches_expected;
  out["channel_equivalent"] = res.channel_equivalent;
  out["message_id"] = res.message_id_hex;
  out["envelope"] = to_pybytes(res.envelope_bytes);
  out["chain"] = to_pybytes(res.chain_bytes);
  out["text"] = res.report_text;
  return out;
}

}  // namespace

PYBIND11_MODULE(_martsia, m) {
  m.doc() = "decentralized confidential data exchange core";

  py::register_exception<Error>(m, "MartsiaError");

  py::class_<maabe::GlobalParams>(m, "GlobalParams")
      .def_static(
          "setup",
          [](const py::bytes& seed, const std::string& curve) {
            return maabe::global_setup(from_pybytes(seed), curve);
          },
          py::arg("seed"), py::arg("curve") = "a1536")
      .def_property_readonly("curve", [](const maabe::GlobalParams& gp) { return gp.curve_id; })
      .def_property_readonly("order",
                             [](const maabe::GlobalParams& gp) {
                               return gp.group().order().get_str();
                             })
      .def("serialize", [](const maabe::GlobalParams& gp) { return to_pybytes(gp.serialize()); })
      .def_static("deserialize", [](const py::bytes& b) {
        return maabe::GlobalParams::deserialize(from_pybytes(b));
      });

  py::class_<PyAuthority>(m, "Authority")
      .def_static("setup", &PyAuthority::setup, py::arg("gp"), py::arg("authority_id"),
                  py::arg("attributes"), py::arg("seed"))
      .def("publics_json", &PyAuthority::publics_json)
      .def("keygen", &PyAuthority::keygen, py::arg("gp"), py::arg("gid"), py::arg("attribute"));

  py::class_<envelope::MessageEnvelope>(m, "Envelope")
      .def_property_readonly("message_id",
                             [](const envelope::MessageEnvelope& e) {
                               return to_pybytes(e.message_id);
                             })
      .def_property_readonly("sender",
                             [](const envelope::MessageEnvelope& e) { return e.sender; })
      .def_property_readonly("slice_ids",
                             [](const envelope::MessageEnvelope& e) {
                               std::vector<py::bytes> ids;
                               for (const auto& s : e.slices) ids.push_back(to_pybytes(s.slice_id));
                               return ids;
                             })
      .def_property_readonly("policies", [](const envelope::MessageEnvelope& e) {
        std::vector<std::string> ps;
        for (const auto& s : e.slices) ps.push_back(s.policy_text);
        return ps;
      });

  m.def("canonical_policy", &canonical_policy, py::arg("text"));
  m.def("policy_satisfied", &policy_satisfied, py::arg("text"), py::arg("universe"),
        py::arg("owned"));
  m.def("lsss_compile", &lsss_compile, py::arg("text"), py::arg("universe"), py::arg("prime"));
  m.def("lsss_reconstruct", &lsss_reconstruct, py::arg("text"), py::arg("universe"),
        py::arg("prime"), py::arg("owned"));

  m.def("seal", &seal, py::arg("gp"), py::arg("slices"), py::arg("instance_id"),
        py::arg("universe"), py::arg("publics"), py::arg("sender"), py::arg("seed"));
  m.def("open_slice", &open_slice, py::arg("gp"), py::arg("envelope"), py::arg("slice_id"),
        py::arg("gid"), py::arg("components"));
  m.def(
      "serialize_envelope",
      [](const maabe::GlobalParams& gp, const envelope::MessageEnvelope& e) {
        return to_pybytes(envelope::serialize(gp, e));
      },
      py::arg("gp"), py::arg("envelope"));
  m.def(
      "deserialize_envelope",
      [](const maabe::GlobalParams& gp, const py::bytes& b) {
        return envelope::deserialize(gp, from_pybytes(b));
      },
      py::arg("gp"), py::arg("data"));

  m.def(
      "locator_for", [](const py::bytes& b) { return cas::locator_for(from_pybytes(b)).text; },
      py::arg("content"));
  m.def(
      "verify_chain",
      [](const py::bytes& b) { return ledger::Ledger::verify_chain_bytes(from_pybytes(b)); },
      py::arg("chain"));
  m.def(
      "address_from_seed",
      [](const py::bytes& seed) { return ledger::Account::from_seed(from_pybytes(seed)).address; },
      py::arg("seed"));

  m.def("run_demo", &demo, py::arg("seed") = "", py::arg("curve") = "",
        py::arg("out_dir") = std::nullopt);
}
