"""Decentralized confidential data exchange: multi-authority ABE envelopes,
LSSS policy compilation, content-addressed storage and a simulated ledger."""

from ._martsia import (
    Authority,
    Envelope,
    GlobalParams,
    MartsiaError,
    address_from_seed,
    canonical_policy,
    deserialize_envelope,
    locator_for,
    lsss_compile,
    lsss_reconstruct,
    open_slice,
    policy_satisfied,
    run_demo,
    seal,
    serialize_envelope,
    verify_chain,
)

__all__ = [
    "Authority",
    "Envelope",
    "GlobalParams",
    "MartsiaError",
    "address_from_seed",
    "canonical_policy",
    "deserialize_envelope",
    "locator_for",
    "lsss_compile",
    "lsss_reconstruct",
    "open_slice",
    "policy_satisfied",
    "run_demo",
    "seal",
    "serialize_envelope",
    "verify_chain",
]
