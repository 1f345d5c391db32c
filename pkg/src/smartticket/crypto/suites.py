"""Signature suites, keys and the suite registry.

Suite 0x01 is EC-Schnorr in the optimized EC-SDSA shape and suite 0x02 is
plain ECDSA, both over P-256 with SHA-256 and a fixed 64-byte encoding.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

from ..errors import RangeError, SuiteRejected, UnknownSuite, WrongSuite
from . import curve as ec
from .curve import P256, Curve
from .nonce import NonceSource

SCHNORR_P256_SHA256 = 0x01
ECDSA_P256_SHA256 = 0x02

MAX_SIGNATURE_LEN = 131
MIN_KEY_BITS = 224
MIN_HASH_BITS = 224

# Families ruled out regardless of parameters.
_EXCLUDED_FAMILIES = {
    "rsa": "signature length equals the modulus size; no secure modulus fits 131 bytes",
    "dsa": "recommended for legacy use only",
    "pv": "only standardized over finite fields; weak key randomness",
    "kdsa": "no reference implementation",
}


@dataclass(frozen=True)
class CryptoSuite:
    suite_id: int
    name: str
    family: str
    curve: Curve
    hash_name: str
    hash_bits: int
    sig_len: int
    sign: Callable[["PrivateKey", bytes, NonceSource], bytes]
    verify: Callable[["PublicKey", bytes, bytes], bool]

    @property
    def key_bits(self) -> int:
        return self.curve.bits

    def hash(self, data: bytes) -> bytes:
        return hashlib.new(self.hash_name, data).digest()


_REGISTRY: Dict[int, CryptoSuite] = {}


def check_admissible(family: str, key_bits: int, hash_bits: int, sig_len: int) -> None:
    """Raise :class:`SuiteRejected` unless the parameters meet the selection rules."""
    fam = family.lower()
    if fam in _EXCLUDED_FAMILIES:
        raise SuiteRejected(f"{family}: {_EXCLUDED_FAMILIES[fam]}")
    if key_bits < MIN_KEY_BITS:
        raise SuiteRejected(f"key length {key_bits} < {MIN_KEY_BITS} bits")
    if hash_bits < MIN_HASH_BITS:
        raise SuiteRejected(f"hash output {hash_bits} < {MIN_HASH_BITS} bits")
    if not 1 <= sig_len <= MAX_SIGNATURE_LEN:
        raise SuiteRejected(f"signature length {sig_len} does not fit the {MAX_SIGNATURE_LEN}-byte field")


def register_suite(suite: CryptoSuite) -> CryptoSuite:
    check_admissible(suite.family, suite.key_bits, suite.hash_bits, suite.sig_len)
    if suite.suite_id in _REGISTRY:
        raise SuiteRejected(f"suite id {suite.suite_id:#04x} already registered")
    if not 0 < suite.suite_id < 256:
        raise SuiteRejected(f"suite id {suite.suite_id} is not a non-zero byte")
    _REGISTRY[suite.suite_id] = suite
    return suite


def get_suite(suite_id: int) -> CryptoSuite:
    try:
        return _REGISTRY[suite_id]
    except KeyError:
        raise UnknownSuite(f"unknown suite {suite_id:#04x}") from None


def is_registered(suite_id: int) -> bool:
    return suite_id in _REGISTRY


def registered_suites() -> Tuple[CryptoSuite, ...]:
    return tuple(_REGISTRY[k] for k in sorted(_REGISTRY))


# -- keys ------------------------------------------------------------------

@dataclass(frozen=True)
class PublicKey:
    point: Tuple[int, int]
    suite_id: int

    def __post_init__(self):
        suite = get_suite(self.suite_id)
        if not ec.on_curve(suite.curve, self.point):
            raise ValueError("public key point is not on the curve")

    def to_bytes(self) -> bytes:
        n = get_suite(self.suite_id).curve.byte_len
        return self.point[0].to_bytes(n, "big") + self.point[1].to_bytes(n, "big")

    @classmethod
    def from_bytes(cls, data: bytes, suite_id: int) -> "PublicKey":
        n = get_suite(suite_id).curve.byte_len
        if len(data) != 2 * n:
            raise ValueError(f"public key must be {2 * n} bytes, got {len(data)}")
        return cls((int.from_bytes(data[:n], "big"), int.from_bytes(data[n:], "big")), suite_id)


@dataclass(frozen=True)
class PrivateKey:
    scalar: int
    suite_id: int

    def __post_init__(self):
        q = get_suite(self.suite_id).curve.q
        if not 1 <= self.scalar <= q - 1:
            raise ValueError("private scalar out of range")

    def __repr__(self) -> str:
        return f"PrivateKey(suite_id={self.suite_id:#04x}, scalar=<hidden>)"

    @property
    def public_key(self) -> PublicKey:
        c = get_suite(self.suite_id).curve
        return PublicKey(ec.base_mul(c, self.scalar), self.suite_id)

    def to_bytes(self) -> bytes:
        return self.scalar.to_bytes(get_suite(self.suite_id).curve.byte_len, "big")


def keypair_generate(suite_id: int, nonce_source: Optional[NonceSource] = None,
                     scalar: Optional[int] = None) -> Tuple[PrivateKey, PublicKey]:
    """Generate a key pair; ``scalar`` forces the private value (test hook)."""
    suite = get_suite(suite_id)
    if scalar is None:
        source = nonce_source or NonceSource.system()
        scalar = source.draw(suite.curve.q, 0, b"keygen" + bytes([suite_id]))
    priv = PrivateKey(scalar, suite_id)
    return priv, priv.public_key


def sign(key: PrivateKey, message: bytes, nonce_source: Optional[NonceSource] = None) -> bytes:
    return get_suite(key.suite_id).sign(key, message, nonce_source or NonceSource.system())


def verify(key: PublicKey, message: bytes, signature: bytes) -> bool:
    try:
        suite = get_suite(key.suite_id)
    except UnknownSuite:
        return False
    return suite.verify(key, message, signature)


def _int(b: bytes) -> int:
    return int.from_bytes(b, "big")


def _split(signature: bytes, n: int) -> Optional[Tuple[int, int]]:
    if len(signature) != 2 * n:
        return None
    return _int(signature[:n]), _int(signature[n:])


# -- EC-Schnorr (EC-SDSA, optimized: only R.x is hashed) --------------------

def schnorr_sign(key: PrivateKey, message: bytes, nonce_source: NonceSource) -> bytes:
    if key.suite_id != SCHNORR_P256_SHA256:
        raise WrongSuite(f"suite {key.suite_id:#04x} is not EC-Schnorr")
    suite = get_suite(key.suite_id)
    c = suite.curve
    n = c.byte_len
    digest = suite.hash(message)
    while True:
        k = nonce_source.draw(c.q, key.scalar, digest)
        R = ec.base_mul(c, k)
        e = _int(suite.hash(R[0].to_bytes(n, "big") + message)) % c.q
        if e == 0:
            continue
        s = (k + e * key.scalar) % c.q
        if s == 0:
            continue
        return e.to_bytes(n, "big") + s.to_bytes(n, "big")


def schnorr_verify(key: PublicKey, message: bytes, signature: bytes) -> bool:
    if key.suite_id != SCHNORR_P256_SHA256:
        return False
    suite = get_suite(key.suite_id)
    c = suite.curve
    parts = _split(signature, c.byte_len)
    if parts is None:
        return False
    e, s = parts
    if not (1 <= e < c.q and 1 <= s < c.q):
        return False
    if not ec.on_curve(c, key.point):
        return False
    # R' = s*G - e*Y
    R = ec.double_mul(c, s, c.q - e, key.point)
    if R is None:
        return False
    return _int(suite.hash(R[0].to_bytes(c.byte_len, "big") + message)) % c.q == e


# -- ECDSA -----------------------------------------------------------------

def ecdsa_sign(key: PrivateKey, message: bytes, nonce_source: NonceSource) -> bytes:
    if key.suite_id != ECDSA_P256_SHA256:
        raise WrongSuite(f"suite {key.suite_id:#04x} is not ECDSA")
    suite = get_suite(key.suite_id)
    c = suite.curve
    digest = suite.hash(message)
    z = _int(digest)  # SHA-256 output already matches the 256-bit order
    while True:
        k = nonce_source.draw(c.q, key.scalar, digest)
        R = ec.base_mul(c, k)
        r = R[0] % c.q
        if r == 0:
            continue
        s = pow(k, -1, c.q) * (z + r * key.scalar) % c.q
        if s == 0:
            continue
        return r.to_bytes(c.byte_len, "big") + s.to_bytes(c.byte_len, "big")


def ecdsa_verify(key: PublicKey, message: bytes, signature: bytes) -> bool:
    if key.suite_id != ECDSA_P256_SHA256:
        return False
    suite = get_suite(key.suite_id)
    c = suite.curve
    parts = _split(signature, c.byte_len)
    if parts is None:
        return False
    r, s = parts
    if not (1 <= r < c.q and 1 <= s < c.q):
        return False
    if not ec.on_curve(c, key.point):
        return False
    z = _int(suite.hash(message))
    w = pow(s, -1, c.q)
    R = ec.double_mul(c, z * w, r * w, key.point)
    if R is None:
        return False
    return R[0] % c.q == r


register_suite(CryptoSuite(
    suite_id=SCHNORR_P256_SHA256, name="EC-SDSA-opt/P-256/SHA-256", family="ec-schnorr",
    curve=P256, hash_name="sha256", hash_bits=256, sig_len=64,
    sign=schnorr_sign, verify=schnorr_verify,
))
register_suite(CryptoSuite(
    suite_id=ECDSA_P256_SHA256, name="ECDSA/P-256/SHA-256", family="ecdsa",
    curve=P256, hash_name="sha256", hash_bits=256, sig_len=64,
    sign=ecdsa_sign, verify=ecdsa_verify,
))


def pattern_hash(pattern, truncation: int = 32) -> bytes:
    """First ``truncation`` bytes of SHA-256 over the marker pattern."""
    if not isinstance(truncation, int) or not 1 <= truncation <= 32:
        raise RangeError(f"truncation must be in 1..32, got {truncation!r}")
    data = pattern.data if hasattr(pattern, "data") else bytes(pattern)
    return hashlib.sha256(data).digest()[:truncation]
