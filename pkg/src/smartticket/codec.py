"""Bit-exact 704-byte ticket payload.

Layout (big-endian, offsets inclusive)::

    0        version            1 B   (= 0x01)
    1        suite_id           1 B
    2-3      tc_id              2 B
    4-7      printer_id         4 B
    8-15     ticket_id          8 B
    16-19    issue_ts           4 B
    20-23    validity_start     4 B
    24-27    validity_end       4 B
    28-59    provider data     32 B
    60-571   marker pattern   512 B
    572      signature length   1 B   (1..131)
    573-703  signature + zero padding

Bytes 0..571 are the signed region.
"""

from __future__ import annotations

import dataclasses
import struct
from dataclasses import dataclass

from .crypto import is_registered
from .errors import ComponentSizeError, StructureError

FORMAT_VERSION = 1

PAYLOAD_SIZE = 704
METADATA_SIZE = 28
PROVIDER_SIZE = 32
PATTERN_SIZE = 512
SIGNATURE_FIELD_SIZE = 132
MAX_SIGNATURE_LEN = SIGNATURE_FIELD_SIZE - 1

METADATA_OFFSET = 0
PROVIDER_OFFSET = METADATA_OFFSET + METADATA_SIZE
PATTERN_OFFSET = PROVIDER_OFFSET + PROVIDER_SIZE
SIGNATURE_OFFSET = PATTERN_OFFSET + PATTERN_SIZE
SIGNED_REGION_SIZE = SIGNATURE_OFFSET

assert SIGNATURE_OFFSET + SIGNATURE_FIELD_SIZE == PAYLOAD_SIZE
assert (METADATA_OFFSET, PROVIDER_OFFSET, PATTERN_OFFSET, SIGNATURE_OFFSET) == (0, 28, 60, 572)

_META = struct.Struct(">BBHIQIII")
assert _META.size == METADATA_SIZE


def _opaque(value, size: int, what: str) -> bytes:
    data = bytes(value)
    if len(data) != size:
        raise ComponentSizeError(f"{what} must be exactly {size} bytes, got {len(data)}")
    return data


@dataclass(frozen=True)
class MarkerPattern:
    """Digital image of the physical random pigment pattern (512 opaque bytes)."""

    data: bytes

    def __post_init__(self):
        object.__setattr__(self, "data", _opaque(self.data, PATTERN_SIZE, "marker pattern"))

    def __bytes__(self) -> bytes:
        return self.data


@dataclass(frozen=True)
class ProviderData:
    data: bytes = bytes(PROVIDER_SIZE)

    def __post_init__(self):
        object.__setattr__(self, "data", _opaque(self.data, PROVIDER_SIZE, "provider data"))

    def __bytes__(self) -> bytes:
        return self.data


@dataclass(frozen=True)
class SignatureField:
    sig_bytes: bytes

    def __post_init__(self):
        sig = bytes(self.sig_bytes)
        if not 1 <= len(sig) <= MAX_SIGNATURE_LEN:
            raise ComponentSizeError(
                f"signature must be 1..{MAX_SIGNATURE_LEN} bytes, got {len(sig)}")
        object.__setattr__(self, "sig_bytes", sig)

    def to_bytes(self) -> bytes:
        n = len(self.sig_bytes)
        return bytes([n]) + self.sig_bytes + bytes(MAX_SIGNATURE_LEN - n)


@dataclass(frozen=True)
class TicketMetadata:
    suite_id: int
    tc_id: int
    printer_id: int
    ticket_id: int
    issue_ts: int
    validity_start: int
    validity_end: int
    version: int = FORMAT_VERSION

    def __post_init__(self):
        for name, bits in (("version", 8), ("suite_id", 8), ("tc_id", 16),
                           ("printer_id", 32), ("ticket_id", 64), ("issue_ts", 32),
                           ("validity_start", 32), ("validity_end", 32)):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v < (1 << bits):
                raise ComponentSizeError(f"{name}={v!r} does not fit in {bits} bits")
        if self.validity_start > self.validity_end:
            raise ComponentSizeError("validity_start is after validity_end")
        if self.issue_ts > self.validity_end:
            raise ComponentSizeError("issue_ts is after validity_end")

    def to_bytes(self) -> bytes:
        return _META.pack(self.version, self.suite_id, self.tc_id, self.printer_id,
                          self.ticket_id, self.issue_ts, self.validity_start,
                          self.validity_end)

    def replace(self, **changes) -> "TicketMetadata":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class TicketPayload:
    metadata: TicketMetadata
    provider: ProviderData
    pattern: MarkerPattern
    signature: SignatureField

    def to_bytes(self) -> bytes:
        return encode_payload(self.metadata, self.provider, self.pattern, self.signature)

    def signed_region(self) -> bytes:
        return assemble_signed_region(self.metadata, self.provider, self.pattern)


def assemble_signed_region(meta: TicketMetadata, provider: ProviderData,
                           pattern: MarkerPattern) -> bytes:
    """The bytes a ticket signature covers, built from components."""
    return meta.to_bytes() + provider.data + pattern.data


def encode_payload(meta: TicketMetadata, provider: ProviderData,
                   pattern: MarkerPattern, sig) -> bytes:
    if not isinstance(sig, SignatureField):
        sig = SignatureField(sig)
    if not isinstance(provider, ProviderData):
        provider = ProviderData(provider)
    if not isinstance(pattern, MarkerPattern):
        pattern = MarkerPattern(pattern)
    out = assemble_signed_region(meta, provider, pattern) + sig.to_bytes()
    assert len(out) == PAYLOAD_SIZE
    return out


def decode_payload(raw: bytes) -> TicketPayload:
    raw = bytes(raw)
    if len(raw) != PAYLOAD_SIZE:
        raise StructureError("length", f"expected {PAYLOAD_SIZE} bytes, got {len(raw)}")
    fields = _META.unpack_from(raw, METADATA_OFFSET)
    version, suite_id = fields[0], fields[1]
    if version != FORMAT_VERSION:
        raise StructureError("version", f"unsupported version {version}")
    if not is_registered(suite_id):
        raise StructureError("suite", f"unknown suite {suite_id:#04x}")
    sig_len = raw[SIGNATURE_OFFSET]
    if not 1 <= sig_len <= MAX_SIGNATURE_LEN:
        raise StructureError("signature-length", f"length byte {sig_len}")
    sig_end = SIGNATURE_OFFSET + 1 + sig_len
    if any(raw[sig_end:]):
        raise StructureError("padding", "nonzero bytes after the signature")
    try:
        meta = TicketMetadata(suite_id=suite_id, tc_id=fields[2], printer_id=fields[3],
                              ticket_id=fields[4], issue_ts=fields[5],
                              validity_start=fields[6], validity_end=fields[7],
                              version=version)
    except ComponentSizeError as exc:
        raise StructureError("metadata", str(exc)) from None
    return TicketPayload(
        metadata=meta,
        provider=ProviderData(raw[PROVIDER_OFFSET:PATTERN_OFFSET]),
        pattern=MarkerPattern(raw[PATTERN_OFFSET:SIGNATURE_OFFSET]),
        signature=SignatureField(raw[SIGNATURE_OFFSET + 1:sig_end]),
    )


def signed_region(raw: bytes) -> bytes:
    raw = bytes(raw)
    if len(raw) != PAYLOAD_SIZE:
        raise StructureError("length", f"expected {PAYLOAD_SIZE} bytes, got {len(raw)}")
    return raw[:SIGNED_REGION_SIZE]


def read_ticket_bytes(data: bytes) -> bytes:
    """Accept a raw 704-byte file or its lowercase-hex text form.

    Hex is detected by length (1408 chars, optionally newline-terminated);
    anything else is returned unchanged for :func:`decode_payload` to judge.
    """
    if len(data) == PAYLOAD_SIZE:
        return data
    text = data[:-1] if data.endswith(b"\n") else data
    if len(text) == 2 * PAYLOAD_SIZE:
        try:
            s = text.decode("ascii")
        except UnicodeDecodeError:
            return data
        if s == s.lower():
            try:
                return bytes.fromhex(s)
            except ValueError:
                pass
    return data


def ticket_to_hex(raw: bytes) -> str:
    return bytes(raw).hex() + "\n"
