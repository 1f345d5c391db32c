"""
Two 64-byte signature suites on P-256
=====================================

Schnorr (EC-SDSA-opt) and ECDSA side by side, plus what a single flipped
bit does to verification.
"""

import time

from smartticket.crypto import (ECDSA_P256_SHA256, SCHNORR_P256_SHA256, NonceSource,
                                check_admissible, get_suite, keypair_generate, sign, verify)

message = b"ticket signed region" * 28
ns = NonceSource.deterministic(7)

for suite_id in (SCHNORR_P256_SHA256, ECDSA_P256_SHA256):
    suite = get_suite(suite_id)
    key, pub = keypair_generate(suite_id, ns)
    t = time.perf_counter()
    sig = sign(key, message, ns)
    t_sign = time.perf_counter() - t
    t = time.perf_counter()
    ok = verify(pub, message, sig)
    t_verify = time.perf_counter() - t
    flipped = bytearray(sig)
    flipped[10] ^= 0x01
    print(f"{suite.name}: {len(sig)} bytes, verify={ok}, flipped bit verify={verify(pub, message, bytes(flipped))}"
          f"  (sign {t_sign * 1e3:.1f} ms, verify {t_verify * 1e3:.1f} ms)")

# the registry refuses suites that would not fit or are too weak
for family, key_bits, hash_bits, sig_len in [("rsa", 2048, 256, 256), ("ecdsa", 160, 256, 40)]:
    try:
        check_admissible(family, key_bits, hash_bits, sig_len)
    except Exception as exc:
        print(f"{family}-{key_bits}: refused ({exc})")
