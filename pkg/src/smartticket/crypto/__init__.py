"""Signature suites, keys, nonces and pattern hashing."""

from .curve import P256, Curve
from .keyfile import dump_private, dump_public, load_key, load_private, load_public
from .nonce import NonceSource
from .suites import (
    ECDSA_P256_SHA256,
    MAX_SIGNATURE_LEN,
    SCHNORR_P256_SHA256,
    CryptoSuite,
    PrivateKey,
    PublicKey,
    check_admissible,
    ecdsa_sign,
    ecdsa_verify,
    get_suite,
    is_registered,
    keypair_generate,
    pattern_hash,
    register_suite,
    registered_suites,
    schnorr_sign,
    schnorr_verify,
    sign,
    verify,
)

__all__ = [
    "P256", "Curve", "NonceSource", "CryptoSuite", "PrivateKey", "PublicKey",
    "SCHNORR_P256_SHA256", "ECDSA_P256_SHA256", "MAX_SIGNATURE_LEN",
    "check_admissible", "register_suite", "get_suite", "is_registered",
    "registered_suites", "keypair_generate", "sign", "verify",
    "schnorr_sign", "schnorr_verify", "ecdsa_sign", "ecdsa_verify",
    "pattern_hash", "dump_private", "dump_public", "load_key",
    "load_private", "load_public",
]
