"""End-to-end smoke coverage of the python surface (toy curve for speed)."""

import json

import pytest

import martsia

CURVE = "a512-test"
UNIVERSE = ["A", "B", "C", "D"]


@pytest.fixture(scope="module")
def gp():
    return martsia.GlobalParams.setup(b"py-smoke", CURVE)


def test_policy_roundtrip():
    text = "a@A and (b@2+ or c@B)"
    canon = martsia.canonical_policy(text)
    assert martsia.canonical_policy(canon) == canon
    assert "and" in canon


def test_policy_satisfaction():
    assert martsia.policy_satisfied("x@2+", UNIVERSE, {"x@B", "x@D"})
    assert not martsia.policy_satisfied("x@2+", UNIVERSE, {"x@B"})


def test_policy_syntax_error():
    with pytest.raises(martsia.MartsiaError):
        martsia.canonical_policy("a@@A")


def test_lsss_agrees_with_evaluation(gp):
    prime = gp.order
    m = martsia.lsss_compile("a@A and b@B", UNIVERSE, prime)
    assert len(m["rows"]) == 2 and m["width"] == 2
    assert martsia.lsss_reconstruct("a@A and b@B", UNIVERSE, prime, {"a@A", "b@B"}) is not None
    assert martsia.lsss_reconstruct("a@A and b@B", UNIVERSE, prime, {"a@A"}) is None


def test_locator():
    empty = martsia.locator_for(b"")
    assert empty == "cas:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert martsia.locator_for(b"x") != empty


def test_seal_open_allow_and_deny(gp):
    auths = {a: martsia.Authority.setup(gp, a, [f"Doctor@{a}", f"43175279@{a}"], f"auth-{a}".encode())
             for a in UNIVERSE}
    publics = [auths[a].publics_json(gp) for a in UNIVERSE]
    env = martsia.seal(gp, [(b"record-1", "Doctor@A")], "43175279", UNIVERSE, publics,
                       "sender-addr", b"seal-seed")
    sid = env.slice_ids[0]
    gid = b"reader-1"
    ring = [auths[a].keygen(gp, gid, f"43175279@{a}") for a in UNIVERSE]
    ring.append(auths["A"].keygen(gp, gid, "Doctor@A"))
    assert martsia.open_slice(gp, env, sid, gid, ring) == b"record-1"
    # without the Doctor@A component the instance clause alone must not suffice
    assert martsia.open_slice(gp, env, sid, gid, ring[:-1]) is None


def test_envelope_serialization_deterministic(gp):
    auth = martsia.Authority.setup(gp, "A", ["x@A", "1@A"], b"auth")
    publics = [auth.publics_json(gp)]
    kwargs = dict(instance_id="1", universe=["A"], publics=publics,
                  sender="s", seed=b"fixed")
    e1 = martsia.seal(gp, [(b"data", "x@A")], **kwargs)
    e2 = martsia.seal(gp, [(b"data", "x@A")], **kwargs)
    b1 = martsia.serialize_envelope(gp, e1)
    assert b1 == martsia.serialize_envelope(gp, e2)
    assert martsia.deserialize_envelope(gp, b1).message_id == e1.message_id


def test_demo_and_chain(tmp_path):
    res = martsia.run_demo(seed="py-demo", curve=CURVE, out_dir=tmp_path)
    assert res["matches_expected"] and res["channel_equivalent"]
    report = json.loads(res["report"])
    assert report["matrix"]["Supplier"] == ["deny", "deny", "allow", "deny"]
    assert martsia.verify_chain(res["chain"])
    tampered = bytearray(res["chain"])
    tampered[len(tampered) // 2] ^= 1
    assert not martsia.verify_chain(bytes(tampered))
    assert (tmp_path / "report.json").exists()


def test_address_derivation():
    a = martsia.address_from_seed(b"\x01" * 32)
    assert len(a) == 40 and a == martsia.address_from_seed(b"\x01" * 32)
    assert a != martsia.address_from_seed(b"\x02" * 32)
