"""Key file text format.

Two lines of lowercase hex: ``suite=<hex2>`` then ``priv=<hex64>`` or
``pub=<hex128>`` (uncompressed ``x || y``).
"""

from __future__ import annotations

import re
from typing import Union

from .suites import PrivateKey, PublicKey, get_suite

_SUITE = re.compile(r"suite=([0-9a-f]{2})")
_VALUE = re.compile(r"(priv|pub)=([0-9a-f]+)")


def dump_private(key: PrivateKey) -> str:
    return f"suite={key.suite_id:02x}\npriv={key.to_bytes().hex()}\n"


def dump_public(key: PublicKey) -> str:
    return f"suite={key.suite_id:02x}\npub={key.to_bytes().hex()}\n"


def load_key(text: str) -> Union[PrivateKey, PublicKey]:
    lines = text.strip("\n").split("\n")
    if len(lines) != 2:
        raise ValueError("key file must have exactly two lines")
    m = _SUITE.fullmatch(lines[0])
    if not m:
        raise ValueError("first line must be suite=<hex2>")
    suite_id = int(m.group(1), 16)
    n = get_suite(suite_id).curve.byte_len
    m = _VALUE.fullmatch(lines[1])
    if not m:
        raise ValueError("second line must be priv=<hex> or pub=<hex>")
    kind, value = m.groups()
    raw = bytes.fromhex(value)
    if kind == "priv":
        if len(raw) != n:
            raise ValueError(f"private key must be {n} bytes")
        return PrivateKey(int.from_bytes(raw, "big"), suite_id)
    return PublicKey.from_bytes(raw, suite_id)


def load_private(text: str) -> PrivateKey:
    key = load_key(text)
    if not isinstance(key, PrivateKey):
        raise ValueError("expected a private key file")
    return key


def load_public(text: str) -> PublicKey:
    key = load_key(text)
    if isinstance(key, PrivateKey):
        return key.public_key
    return key
