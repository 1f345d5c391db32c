import hashlib
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from smartticket.codec import MarkerPattern
from smartticket.crypto import (
    ECDSA_P256_SHA256,
    P256,
    SCHNORR_P256_SHA256,
    CryptoSuite,
    NonceSource,
    PublicKey,
    check_admissible,
    dump_private,
    dump_public,
    ecdsa_sign,
    ecdsa_verify,
    get_suite,
    keypair_generate,
    load_key,
    pattern_hash,
    register_suite,
    registered_suites,
    schnorr_sign,
    schnorr_verify,
    sign,
    verify,
)
from smartticket.crypto import curve as ec
from smartticket.errors import (
    NonceFailure,
    RangeError,
    SuiteRejected,
    UnknownSuite,
    WrongSuite,
)

# Frozen oracle outputs (tests/oracles.py, affine double-and-add + pure SHA-256).
G2 = (0x7CF27B188D034F7E8A52380304B51AC3C08969E277F21B35A60B48FC47669978,
      0x07775510DB8ED040293D9AC69F7430DBBA7DADE63CE982299E04B79D227873D1)
SHA256_512_ZEROS = "076a27c79e5ace2a3d47f9dd2e83e4ff6ea8872b3c2218f66c92b89b55f36560"
# scalar 1, k = 1, empty message
SCHNORR_KAT_1 = ("40577091d962d2c36217b8e1a3c7eee4a08d3c1ad4debaacc9fa2e259ff45118"
                 "40577091d962d2c36217b8e1a3c7eee4a08d3c1ad4debaacc9fa2e259ff45119")
# RFC 6979 A.2.5 key and k for "sample"; the ECDSA value equals the published vector
RFC_X = 0xC9AFA9D845BA75166B5C215767B1D6934E50C3DB36E89B127B8A622B120F6721
RFC_K = 0xA6E3C57DD01ABE90086538398355DD4C3B17AA873382B0F24D6129493D8AAD60
RFC_UX = 0x60FED4BA255A9D31C961EB74C6356D68C049B8923B61FA6CE669622E60F29FB6
RFC_UY = 0x7903FE1008B8BC99A41AE9E95628BC64F2F1B20C2D7E9F5177A3C294D4462299
ECDSA_KAT_SAMPLE = ("efd48b2aacb6a8fd1140dd9cd45e81d69d2c877b56aaf991c34d0ea84eaf3716"
                    "f7cb1c942d657c41d436c7a1b6e29f65f3e900dbb9aff4064dc4ab2f843acda8")
SCHNORR_KAT_SAMPLE = ("a04b4a5954484e2956954a2f9136cc0461e7714809875880e35cd4e1457dcbc9"
                      "cfaa013d591603fe1dfbfdfaa63b254d16766ff1cad35f140ba8a076260657e3")


def test_frozen_values_reproduce_from_oracle():
    assert oracles.mul(2) == G2
    assert oracles.sha256(bytes(512)).hex() == SHA256_512_ZEROS
    assert oracles.schnorr_sign(1, b"", 1).hex() == SCHNORR_KAT_1
    assert oracles.mul(RFC_X) == (RFC_UX, RFC_UY)
    assert oracles.ecdsa_sign(RFC_X, b"sample", RFC_K).hex() == ECDSA_KAT_SAMPLE
    assert oracles.schnorr_sign(RFC_X, b"sample", RFC_K).hex() == SCHNORR_KAT_SAMPLE


# -- curve ---------------------------------------------------------------------

def test_base_point_on_curve_and_order():
    assert ec.on_curve(P256, P256.G)
    assert ec.base_mul(P256, P256.q) is None
    assert ec.base_mul(P256, P256.q - 1) == (P256.gx, P256.p - P256.gy)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, P256.q - 1))
def test_scalar_mul_matches_affine_oracle(k):
    assert ec.base_mul(P256, k) == oracles.mul(k)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, P256.q - 1), st.integers(1, P256.q - 1), st.integers(1, P256.q - 1))
def test_double_mul_matches_oracle(u, v, d):
    Q = oracles.mul(d)
    assert ec.double_mul(P256, u, v, Q) == oracles.add(oracles.mul(u), oracles.mul(v, Q))


def test_point_add_edge_cases():
    G = P256.G
    assert ec.point_add(P256, G, None) == G
    assert ec.point_add(P256, G, ec.point_neg(P256, G)) is None
    assert ec.point_add(P256, G, G) == G2


# -- keys ----------------------------------------------------------------------

def test_keypair_scalar_one_gives_base_point():
    _, pub = keypair_generate(SCHNORR_P256_SHA256, scalar=1)
    assert pub.point == P256.G


def test_keypair_scalar_two_matches_oracle():
    _, pub = keypair_generate(SCHNORR_P256_SHA256, scalar=2)
    assert pub.point == G2


def test_unknown_suite():
    with pytest.raises(UnknownSuite):
        keypair_generate(0x7F)


def test_deterministic_keygen_is_reproducible():
    a = keypair_generate(1, NonceSource.deterministic(9))
    b = keypair_generate(1, NonceSource.deterministic(9))
    assert a == b
    src = NonceSource.deterministic(9)
    assert keypair_generate(1, src) != keypair_generate(1, src)


def test_public_key_must_be_on_curve():
    with pytest.raises(ValueError):
        PublicKey((P256.gx, P256.gy + 1), SCHNORR_P256_SHA256)


def test_key_file_round_trip():
    priv, pub = keypair_generate(ECDSA_P256_SHA256, NonceSource.deterministic(3))
    text = dump_private(priv)
    assert text.splitlines()[0] == "suite=02"
    assert len(text.splitlines()[1]) == len("priv=") + 64
    assert load_key(text) == priv
    pub_text = dump_public(pub)
    assert len(pub_text.splitlines()[1]) == len("pub=") + 128
    assert load_key(pub_text) == pub
    with pytest.raises(ValueError):
        load_key(pub_text.upper())


# -- Schnorr -------------------------------------------------------------------

def test_schnorr_known_answer_scalar_one():
    priv, pub = keypair_generate(SCHNORR_P256_SHA256, scalar=1)
    sig = schnorr_sign(priv, b"", NonceSource.fixed([1]))
    assert sig.hex() == SCHNORR_KAT_1
    assert schnorr_verify(pub, b"", sig)


def test_schnorr_known_answer_rfc_key():
    priv, pub = keypair_generate(SCHNORR_P256_SHA256, scalar=RFC_X)
    sig = schnorr_sign(priv, b"sample", NonceSource.fixed([RFC_K]))
    assert sig.hex() == SCHNORR_KAT_SAMPLE
    assert oracles.schnorr_verify(pub.point, b"sample", sig)


def test_schnorr_algebra():
    # s*G == R + e*Y with R = k*G
    d, k = 0x1234567, 0xBEEF
    priv, pub = keypair_generate(SCHNORR_P256_SHA256, scalar=d)
    sig = schnorr_sign(priv, b"msg", NonceSource.fixed([k]))
    e, s = int.from_bytes(sig[:32], "big"), int.from_bytes(sig[32:], "big")
    assert oracles.mul(s) == oracles.add(oracles.mul(k), oracles.mul(e, pub.point))


def test_schnorr_randomized_signatures_differ():
    priv, pub = keypair_generate(SCHNORR_P256_SHA256)
    a = schnorr_sign(priv, b"ticket", NonceSource.system())
    b = schnorr_sign(priv, b"ticket", NonceSource.system())
    assert a != b
    assert schnorr_verify(pub, b"ticket", a) and schnorr_verify(pub, b"ticket", b)


def test_schnorr_rejects_range_and_tamper():
    priv, pub = keypair_generate(SCHNORR_P256_SHA256, NonceSource.deterministic(1))
    sig = schnorr_sign(priv, b"m", NonceSource.deterministic(2))
    assert not schnorr_verify(pub, b"n", sig)
    assert not schnorr_verify(pub, b"m", sig[:32] + bytes(32))
    assert not schnorr_verify(pub, b"m", bytes(32) + sig[32:])
    assert not schnorr_verify(pub, b"m", sig[:32] + P256.q.to_bytes(32, "big"))
    assert not schnorr_verify(pub, b"m", sig[:63])
    assert not schnorr_verify(pub, b"m", bytes(64))


def test_wrong_suite():
    priv, _ = keypair_generate(ECDSA_P256_SHA256, scalar=5)
    with pytest.raises(WrongSuite):
        schnorr_sign(priv, b"", NonceSource.system())
    priv, _ = keypair_generate(SCHNORR_P256_SHA256, scalar=5)
    with pytest.raises(WrongSuite):
        ecdsa_sign(priv, b"", NonceSource.system())


def test_nonce_exhaustion():
    priv, _ = keypair_generate(SCHNORR_P256_SHA256, scalar=5)
    src = NonceSource.fixed([3])
    schnorr_sign(priv, b"a", src)
    with pytest.raises(NonceFailure):
        schnorr_sign(priv, b"b", src)
    src = NonceSource.deterministic(1, max_draws=1)
    schnorr_sign(priv, b"a", src)
    with pytest.raises(NonceFailure):
        schnorr_sign(priv, b"b", src)


def test_deterministic_nonces_unique_across_messages():
    src = NonceSource.deterministic(77)
    seen = set()
    for i in range(500):
        digest = hashlib.sha256(i.to_bytes(4, "big")).digest()
        k = src.draw(P256.q, 12345, digest)
        assert 1 <= k < P256.q
        seen.add(k)
    assert len(seen) == 500


# -- ECDSA ---------------------------------------------------------------------

def test_ecdsa_known_answer_rfc6979_sample():
    priv, pub = keypair_generate(ECDSA_P256_SHA256, scalar=RFC_X)
    assert pub.point == (RFC_UX, RFC_UY)
    sig = ecdsa_sign(priv, b"sample", NonceSource.fixed([RFC_K]))
    assert sig.hex() == ECDSA_KAT_SAMPLE
    assert ecdsa_verify(pub, b"sample", sig)
    assert oracles.ecdsa_verify(pub.point, b"sample", sig)


def test_ecdsa_cross_checked_with_openssl():
    pytest.importorskip("cryptography")
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric import ec as cec
    from cryptography.hazmat.primitives.asymmetric.utils import encode_dss_signature

    rng = random.Random(11)
    for _ in range(10):
        priv, pub = keypair_generate(ECDSA_P256_SHA256, NonceSource.deterministic(rng.getrandbits(32)))
        msg = rng.randbytes(rng.randrange(0, 200))
        sig = ecdsa_sign(priv, msg, NonceSource.deterministic(rng.getrandbits(32)))
        theirs = cec.EllipticCurvePublicNumbers(*pub.point, cec.SECP256R1()).public_key()
        der = encode_dss_signature(int.from_bytes(sig[:32], "big"), int.from_bytes(sig[32:], "big"))
        theirs.verify(der, msg, cec.ECDSA(hashes.SHA256()))


def test_ecdsa_round_trips_and_wrong_key():
    src = NonceSource.deterministic(4)
    priv, pub = keypair_generate(ECDSA_P256_SHA256, src)
    _, other = keypair_generate(ECDSA_P256_SHA256, src)
    rng = random.Random(4)
    for _ in range(100):
        msg = rng.randbytes(rng.randrange(0, 64))
        sig = ecdsa_sign(priv, msg, src)
        assert len(sig) == 64
        assert ecdsa_verify(pub, msg, sig)
    assert not ecdsa_verify(other, msg, sig)


# -- suites and registry ---------------------------------------------------------

@pytest.mark.parametrize("suite_id", [SCHNORR_P256_SHA256, ECDSA_P256_SHA256])
def test_suite_parameters(suite_id):
    s = get_suite(suite_id)
    assert s.sig_len == 64 <= 131
    assert s.key_bits >= 224 and s.hash_bits >= 224
    priv, pub = keypair_generate(suite_id, NonceSource.deterministic(suite_id))
    assert len(sign(priv, b"x", NonceSource.deterministic(1))) == 64
    assert verify(pub, b"x", sign(priv, b"x"))


def test_registry_lists_only_admissible_suites():
    assert [s.suite_id for s in registered_suites()] == [1, 2]


@pytest.mark.parametrize("family,key_bits,hash_bits,sig_len", [
    ("rsa", 2048, 256, 256),        # RSA-2048 signature is 256 bytes
    ("rsa", 1024, 256, 128),        # fits but rejected as a family
    ("dsa", 2048, 256, 64),
    ("pv", 256, 256, 64),
    ("ec-schnorr", 192, 256, 48),   # curve too small
    ("ecdsa", 256, 160, 64),        # SHA-1 sized hash
    ("ec-schnorr", 521, 512, 132),  # does not fit the signature field
])
def test_registry_guard(family, key_bits, hash_bits, sig_len):
    with pytest.raises(SuiteRejected):
        check_admissible(family, key_bits, hash_bits, sig_len)


def test_register_suite_enforces_guard():
    from smartticket.crypto.curve import Curve
    small = Curve("toy", p=23, a=1, b=1, gx=3, gy=10, q=28, byte_len=1)
    s = CryptoSuite(0x30, "toy", "ec-schnorr", small, "sha256", 256, 2, schnorr_sign, schnorr_verify)
    with pytest.raises(SuiteRejected):
        register_suite(s)
    with pytest.raises(SuiteRejected):
        register_suite(get_suite(1))  # duplicate id


# -- pattern hash ----------------------------------------------------------------

def test_pattern_hash_matches_independent_sha256():
    assert pattern_hash(MarkerPattern(bytes(512)), 32).hex() == SHA256_512_ZEROS


@settings(max_examples=50)
@given(st.binary(min_size=512, max_size=512), st.integers(1, 32))
def test_pattern_hash_prefix(data, n):
    p = MarkerPattern(data)
    assert pattern_hash(p, n) == pattern_hash(p, 32)[:n]
    assert pattern_hash(p, 32) == oracles.sha256(data)


def test_pattern_hash_distinct():
    rng = random.Random(0)
    a, b = MarkerPattern(rng.randbytes(512)), MarkerPattern(rng.randbytes(512))
    assert pattern_hash(a) != pattern_hash(b)


@pytest.mark.parametrize("n", [0, 33, -1])
def test_pattern_hash_range(n):
    with pytest.raises(RangeError):
        pattern_hash(MarkerPattern(bytes(512)), n)
